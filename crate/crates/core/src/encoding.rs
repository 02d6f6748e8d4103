//! Train-fold-only feature encodings: label, one-hot and PCA projections.
//!
//! Vocabularies come from the schema, never from observed values, so the
//! one-hot width is identical for every fold. Numeric variables are min-max
//! scaled with bounds observed on the fitting rows only; values outside those
//! bounds are clipped to [0, 1] and counted.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Record, Schema, Value, VariableKind};
use crate::error::{shape_err, Error, Result};
use crate::numerics::{Matrix, PcaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    Label,
    Onehot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnEncoder {
    Categories { name: String, kind: VariableKind, categories: Vec<String> },
    Numeric { name: String, min: f64, max: f64 },
}

impl ColumnEncoder {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoder::Categories { name, .. } | ColumnEncoder::Numeric { name, .. } => name,
        }
    }

    pub fn onehot_width(&self) -> usize {
        match self {
            ColumnEncoder::Categories { categories, .. } => categories.len(),
            ColumnEncoder::Numeric { .. } => 1,
        }
    }

    fn scale(&self, v: f64) -> (f64, bool) {
        match *self {
            ColumnEncoder::Numeric { min, max, .. } => {
                if max <= min {
                    return (0.0, v != min);
                }
                let s = (v - min) / (max - min);
                if s < 0.0 {
                    (0.0, true)
                } else if s > 1.0 {
                    (1.0, true)
                } else {
                    (s, false)
                }
            }
            ColumnEncoder::Categories { .. } => (v, false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingPlan {
    pub columns: Vec<ColumnEncoder>,
    pub pca: Option<PcaModel>,
}

/// Encoded matrix plus the number of numeric cells clipped into [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub matrix: Matrix,
    pub clipped: usize,
}

impl EncodingPlan {
    pub fn onehot_width(&self) -> usize {
        self.columns.iter().map(ColumnEncoder::onehot_width).sum()
    }

    pub fn label_width(&self) -> usize {
        self.columns.len()
    }

    pub fn width(&self, mode: EncodingMode) -> usize {
        match mode {
            EncodingMode::Label => self.label_width(),
            EncodingMode::Onehot => self.onehot_width(),
        }
    }

    /// Starting column of each variable's block in one-hot layout.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.columns
            .iter()
            .map(|c| {
                let start = acc;
                acc += c.onehot_width();
                start
            })
            .collect()
    }

    /// Errors naming the first variable whose name, kind or categories differ.
    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        if schema.len() != self.columns.len() {
            return shape_err(format!(
                "plan encodes {} variables, data has {}",
                self.columns.len(),
                schema.len()
            ));
        }
        for (col, spec) in self.columns.iter().zip(&schema.variables) {
            let same = match col {
                ColumnEncoder::Categories { name, categories, .. } => {
                    *name == spec.name && *categories == spec.categories
                }
                ColumnEncoder::Numeric { name, .. } => {
                    *name == spec.name && spec.kind == VariableKind::Numeric
                }
            };
            if !same {
                return Err(Error::Shape(format!("schema mismatch at variable '{}'", spec.name)));
            }
        }
        Ok(())
    }

    pub fn transform(&self, ds: &Dataset, mode: EncodingMode) -> Result<Encoded> {
        self.check_schema(ds.schema())?;
        self.transform_records(ds.records(), mode)
    }

    pub fn transform_records(&self, records: &[Record], mode: EncodingMode) -> Result<Encoded> {
        let width = self.width(mode);
        let mut values = Vec::with_capacity(records.len() * width);
        let mut clipped = 0;
        for (r, rec) in records.iter().enumerate() {
            if rec.len() != self.columns.len() {
                return shape_err(format!("record {r} has {} values", rec.len()));
            }
            for (col, &value) in self.columns.iter().zip(rec) {
                match (col, value) {
                    (ColumnEncoder::Numeric { .. }, Value::Number(v)) => {
                        let (s, c) = col.scale(v);
                        clipped += c as usize;
                        values.push(s);
                    }
                    (ColumnEncoder::Categories { categories, .. }, Value::Category(i)) => {
                        let i = i as usize;
                        if i >= categories.len() {
                            return shape_err(format!(
                                "record {r}: category index {i} out of range for '{}'",
                                col.name()
                            ));
                        }
                        match mode {
                            EncodingMode::Label => values.push(i as f64),
                            EncodingMode::Onehot => {
                                let start = values.len();
                                values.resize(start + categories.len(), 0.0);
                                values[start + i] = 1.0;
                            }
                        }
                    }
                    _ => {
                        return shape_err(format!(
                            "record {r}: value kind does not match variable '{}'",
                            col.name()
                        ))
                    }
                }
            }
        }
        Ok(Encoded { matrix: Matrix::from_raw(records.len(), width, values), clipped })
    }

    /// Decodes one-hot rows: argmax per categorical block (first on ties),
    /// numeric columns mapped back through the scaler.
    pub fn inverse_onehot(&self, x: &Matrix) -> Result<Vec<Record>> {
        if x.cols() != self.onehot_width() {
            return shape_err(format!("expected {} columns, got {}", self.onehot_width(), x.cols()));
        }
        x.iter_rows()
            .map(|row| {
                let mut offset = 0;
                self.columns
                    .iter()
                    .map(|col| {
                        let w = col.onehot_width();
                        let block = &row[offset..offset + w];
                        offset += w;
                        match *col {
                            ColumnEncoder::Numeric { min, max, .. } => {
                                Ok(Value::Number(min + block[0] * (max - min)))
                            }
                            ColumnEncoder::Categories { ref name, .. } => {
                                let mut best = 0;
                                for (i, &v) in block.iter().enumerate() {
                                    if v > block[best] {
                                        best = i;
                                    }
                                }
                                if block.iter().all(|&v| v == 0.0) {
                                    return Err(Error::Ambiguous(name.clone()));
                                }
                                Ok(Value::Category(best as u32))
                            }
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Plan with a PCA model fitted on an already-encoded training matrix.
    pub fn with_pca(mut self, train: &Matrix, k: usize) -> Result<Self> {
        self.pca = Some(PcaModel::fit(train, k)?);
        Ok(self)
    }

    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        match &self.pca {
            Some(p) => p.transform(x),
            None => Err(Error::Parameter("plan has no PCA model".into())),
        }
    }

    /// Canonical bytes of the fitted state, for leakage and provenance checks.
    pub fn state_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("plan serializes")
    }
}

/// Fits scalers on `rows` of `ds`; vocabularies are taken from the schema.
/// A numeric variable that is constant on the subset maps to 0.0.
pub fn fit_encoding(ds: &Dataset, rows: &[usize]) -> Result<EncodingPlan> {
    if rows.is_empty() {
        return Err(Error::EmptyInput("encoding fitted on an empty row subset".into()));
    }
    let columns = ds
        .schema()
        .variables
        .iter()
        .enumerate()
        .map(|(j, spec)| match spec.kind {
            VariableKind::Numeric => {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for &r in rows {
                    let v = ds.records()[r][j].as_f64();
                    min = min.min(v);
                    max = max.max(v);
                }
                ColumnEncoder::Numeric { name: spec.name.clone(), min, max }
            }
            kind => ColumnEncoder::Categories {
                name: spec.name.clone(),
                kind,
                categories: spec.categories.clone(),
            },
        })
        .collect();
    Ok(EncodingPlan { columns, pca: None })
}

/// Per-variable width report against an expected total.
#[derive(Debug, Clone, Serialize)]
pub struct WidthAudit {
    pub variables: Vec<(String, usize)>,
    pub total: usize,
    pub expected: Option<usize>,
}

impl WidthAudit {
    pub fn residual(&self) -> Option<i64> {
        self.expected.map(|e| e as i64 - self.total as i64)
    }
}

pub fn audit_width(schema: &Schema) -> WidthAudit {
    let variables: Vec<(String, usize)> = schema
        .variables
        .iter()
        .map(|v| (v.name.clone(), if v.kind.is_numeric() { 1 } else { v.categories.len() }))
        .collect();
    let total = variables.iter().map(|(_, w)| w).sum();
    WidthAudit { variables, total, expected: schema.expected_onehot_width }
}

/// Values a CSV actually uses in one variable's column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservedColumn {
    pub name: String,
    /// Schema one-hot width of the variable.
    pub schema_width: usize,
    /// Distinct non-empty trimmed values in the file.
    pub distinct: usize,
    /// Values of a non-numeric variable that the schema does not list, sorted.
    pub unknown: Vec<String>,
}

/// Scans a CSV without validating it and reports what every schema variable's
/// column contains. Missing columns are an error.
pub fn audit_csv<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Vec<ObservedColumn>> {
    use std::collections::BTreeSet;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(crate::error::DatasetError::from)?.clone();
    let cols: Vec<usize> = schema
        .variables
        .iter()
        .map(|v| {
            header
                .iter()
                .position(|h| h.trim() == v.column_name())
                .ok_or_else(|| crate::error::DatasetError::MissingColumn(v.column_name().to_string()))
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); cols.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(crate::error::DatasetError::from)?;
        for (set, &c) in seen.iter_mut().zip(&cols) {
            let v = rec.get(c).unwrap_or("").trim();
            if !v.is_empty() {
                set.insert(v.to_string());
            }
        }
    }
    Ok(schema
        .variables
        .iter()
        .zip(seen)
        .map(|(spec, values)| {
            let unknown = if spec.kind.is_numeric() {
                Vec::new()
            } else {
                values.iter().filter(|v| spec.category_index(v).is_none()).cloned().collect()
            };
            ObservedColumn {
                name: spec.name.clone(),
                schema_width: if spec.kind.is_numeric() { 1 } else { spec.categories.len() },
                distinct: values.len(),
                unknown,
            }
        })
        .collect())
}
