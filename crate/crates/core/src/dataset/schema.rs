//! Versioned variable schema.
//!
//! The schema is a TOML document:
//!
//! ```toml
//! format_version = 1
//! name = "BSNG"
//! expected_onehot_width = 687      # optional, checked by the width audit
//! expected_rows = 1811              # optional, compared by `validate`
//! expected_positives = 142
//! location_column = "Regional unit" # optional, per-group counts when present
//!
//! [target]
//! name = "Black Spot"
//! categories = ["Non-blackspot", "Blackspot"]   # [negative, positive]
//!
//! [[variable]]
//! name = "Month"
//! kind = "categorical"                # categorical | ordinal | binary | numeric
//! column = "month"                    # optional CSV header, defaults to name
//! categories = ["January", "February"]
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Result};

pub const SCHEMA_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Categorical,
    Ordinal,
    Binary,
    Numeric,
}

impl VariableKind {
    pub fn is_numeric(self) -> bool {
        self == VariableKind::Numeric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl VariableSpec {
    pub fn column_name(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }

    pub fn category_index(&self, value: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<String>,
    /// `[negative, positive]`.
    pub categories: Vec<String>,
}

impl TargetSpec {
    pub fn column_name(&self) -> &str {
        self.column.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub format_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_onehot_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_variable_count: Option<usize>,
    /// Published row total, reported next to the loaded count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_positives: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location_column: Option<String>,
    pub target: TargetSpec,
    #[serde(rename = "variable")]
    pub variables: Vec<VariableSpec>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Schema =
            toml::from_str(text).map_err(|e| DatasetError::Schema(e.to_string()))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            DatasetError::Schema(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(DatasetError::Schema(msg).into());
        if self.format_version != SCHEMA_FORMAT_VERSION {
            return fail(format!(
                "schema format version {} (supported: {SCHEMA_FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.target.categories.len() != 2 {
            return fail(format!(
                "target '{}' must list exactly two categories [negative, positive]",
                self.target.name
            ));
        }
        if let Some(expected) = self.expected_variable_count {
            if self.variables.len() != expected {
                return fail(format!(
                    "{} feature variables declared, schema expects {expected}",
                    self.variables.len()
                ));
            }
        }
        let mut names = HashSet::new();
        let mut columns = HashSet::new();
        for v in &self.variables {
            if !names.insert(v.name.as_str()) {
                return fail(format!("duplicate variable name '{}'", v.name));
            }
            if !columns.insert(v.column_name()) {
                return fail(format!("duplicate column '{}'", v.column_name()));
            }
            if v.name == self.target.name {
                return fail(format!("'{}' is both a feature and the target", v.name));
            }
            match v.kind {
                VariableKind::Numeric if !v.categories.is_empty() => {
                    return fail(format!("numeric variable '{}' lists categories", v.name));
                }
                VariableKind::Binary if v.categories.len() != 2 => {
                    return fail(format!("binary variable '{}' needs exactly 2 categories", v.name));
                }
                VariableKind::Categorical | VariableKind::Ordinal if v.categories.len() < 2 => {
                    return fail(format!("variable '{}' needs at least 2 categories", v.name));
                }
                _ => {}
            }
            let mut seen = HashSet::new();
            for c in &v.categories {
                if !seen.insert(c.as_str()) {
                    return fail(format!("variable '{}' repeats category '{c}'", v.name));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variable(&self, name: &str) -> Option<(usize, &VariableSpec)> {
        self.variables.iter().enumerate().find(|(_, v)| v.name == name)
    }

    /// One-hot width: category count of every non-numeric variable plus one
    /// column per numeric variable.
    pub fn onehot_width(&self) -> usize {
        self.variables
            .iter()
            .map(|v| if v.kind.is_numeric() { 1 } else { v.categories.len() })
            .sum()
    }
}

/// The BSNG schema shipped with the crate.
pub fn bsng_schema() -> Schema {
    Schema::from_toml_str(include_str!("../../schema/bsng.toml")).expect("bundled schema is valid")
}
