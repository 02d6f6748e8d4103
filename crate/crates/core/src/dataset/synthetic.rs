//! Seeded random tables that satisfy a schema, for tests and smoke runs.

use crate::dataset::{Dataset, Schema, Value, VariableKind};
use crate::error::{param_err, Result};
use crate::numerics::RngState;

/// `rows` records with exactly `positives` positive labels.
///
/// Categories are uniform and numeric values are integers in 0..=23. Positive
/// rows lean towards the last category of every second non-numeric variable,
/// so classifiers have something weak to find.
pub fn synthetic_dataset(schema: &Schema, rows: usize, positives: usize, seed: u64) -> Result<Dataset> {
    if positives > rows {
        return param_err(format!("{positives} positives out of {rows} rows"));
    }
    let mut rng = RngState::new(seed);
    let mut labels: Vec<bool> = (0..rows).map(|i| i < positives).collect();
    rng.shuffle(&mut labels);
    let records = labels
        .iter()
        .map(|&pos| {
            schema
                .variables
                .iter()
                .enumerate()
                .map(|(j, spec)| match spec.kind {
                    VariableKind::Numeric => Value::Number(rng.below(24) as f64),
                    _ => {
                        let k = spec.categories.len();
                        if pos && j % 2 == 0 && rng.uniform() < 0.5 {
                            Value::Category(k as u32 - 1)
                        } else {
                            Value::Category(rng.below(k) as u32)
                        }
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_records(schema.clone(), records, labels)
}
