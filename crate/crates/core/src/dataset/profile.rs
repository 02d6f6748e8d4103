use std::fmt;

use serde::Serialize;

use crate::dataset::{Dataset, Value, VariableKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum VariableSummary {
    /// Mode ties resolve to the earliest category in schema order.
    Categorical { mode: String, counts: Vec<(String, usize)> },
    Numeric { mean: f64, min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableProfile {
    pub name: String,
    pub kind: VariableKind,
    pub summary: VariableSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub rows: usize,
    pub positives: usize,
    pub prevalence: f64,
    pub variables: Vec<VariableProfile>,
}

impl Profile {
    pub fn get(&self, name: &str) -> Option<&VariableSummary> {
        self.variables.iter().find(|v| v.name == name).map(|v| &v.summary)
    }
}

pub fn profile(ds: &Dataset) -> Result<Profile> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("cannot profile a dataset with no rows".into()));
    }
    let n = ds.len();
    let variables = ds
        .schema()
        .variables
        .iter()
        .enumerate()
        .map(|(j, spec)| {
            let summary = if spec.kind == VariableKind::Numeric {
                let (mut sum, mut min, mut max) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
                for rec in ds.records() {
                    let v = rec[j].as_f64();
                    sum += v;
                    min = min.min(v);
                    max = max.max(v);
                }
                VariableSummary::Numeric { mean: sum / n as f64, min, max }
            } else {
                let mut counts = vec![0usize; spec.categories.len()];
                for rec in ds.records() {
                    if let Value::Category(i) = rec[j] {
                        counts[i as usize] += 1;
                    }
                }
                let mode = counts
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| spec.categories[i].clone())
                    .unwrap_or_default();
                VariableSummary::Categorical {
                    mode,
                    counts: spec.categories.iter().cloned().zip(counts).collect(),
                }
            };
            VariableProfile { name: spec.name.clone(), kind: spec.kind, summary }
        })
        .collect();
    let positives = ds.positives();
    Ok(Profile { rows: n, positives, prevalence: positives as f64 / n as f64, variables })
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.variables.iter().map(|v| v.name.len()).max().unwrap_or(8).max(8);
        writeln!(f, "{:<width$}  {:<12}  {:<20}  {:>10}", "Variable", "Kind", "Mode", "Mean")?;
        for v in &self.variables {
            let kind = format!("{:?}", v.kind).to_lowercase();
            match &v.summary {
                VariableSummary::Categorical { mode, .. } => {
                    writeln!(f, "{:<width$}  {:<12}  {:<20}  {:>10}", v.name, kind, mode, "-")?
                }
                VariableSummary::Numeric { mean, .. } => {
                    writeln!(f, "{:<width$}  {:<12}  {:<20}  {:>10.3}", v.name, kind, "-", mean)?
                }
            }
        }
        write!(
            f,
            "{} rows, {} positive ({:.2}% prevalence)",
            self.rows,
            self.positives,
            100.0 * self.prevalence
        )
    }
}
