//! Schema-validated loading of the accident table, profiling and stratified folds.

pub mod folds;
pub mod profile;
pub mod schema;
mod synthetic;

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{DatasetError, Result, RowError};

pub use folds::{stratified_kfold, FoldPlan};
pub use profile::{profile, Profile, VariableSummary};
pub use schema::{bsng_schema, Schema, TargetSpec, VariableKind, VariableSpec};
pub use synthetic::synthetic_dataset;

/// One validated cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    /// Index into the variable's category list.
    Category(u32),
    Number(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Category(i) => i as f64,
            Value::Number(v) => v,
        }
    }
}

pub type Record = Vec<Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    records: Vec<Record>,
    labels: Vec<bool>,
    locations: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from already-typed records, checking them against the schema.
    pub fn from_records(schema: Schema, records: Vec<Record>, labels: Vec<bool>) -> Result<Self> {
        if records.len() != labels.len() {
            return Err(DatasetError::Schema(format!(
                "{} records but {} labels",
                records.len(),
                labels.len()
            ))
            .into());
        }
        let mut errors = Vec::new();
        for (r, rec) in records.iter().enumerate() {
            if rec.len() != schema.len() {
                errors.push(RowError {
                    row: r,
                    column: String::new(),
                    value: String::new(),
                    reason: format!("{} values, schema has {}", rec.len(), schema.len()),
                });
                continue;
            }
            for (spec, value) in schema.variables.iter().zip(rec) {
                let ok = match (spec.kind, value) {
                    (VariableKind::Numeric, Value::Number(v)) => v.is_finite(),
                    (VariableKind::Numeric, Value::Category(_)) => false,
                    (_, Value::Category(i)) => (*i as usize) < spec.categories.len(),
                    (_, Value::Number(_)) => false,
                };
                if !ok {
                    errors.push(RowError {
                        row: r,
                        column: spec.name.clone(),
                        value: format!("{value:?}"),
                        reason: "value does not match variable kind".into(),
                    });
                }
            }
        }
        if !errors.is_empty() {
            return Err(DatasetError::Rows(errors).into());
        }
        Ok(Self { schema, records, labels, locations: None })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Values of the schema's optional location column, when the CSV had it.
    pub fn locations(&self) -> Option<&[String]> {
        self.locations.as_deref()
    }

    /// Per-location (accidents, positives), sorted by location name.
    pub fn location_counts(&self) -> Option<Vec<(String, usize, usize)>> {
        let locs = self.locations.as_ref()?;
        let mut map: std::collections::BTreeMap<&str, (usize, usize)> = Default::default();
        for (loc, &label) in locs.iter().zip(&self.labels) {
            let e = map.entry(loc.as_str()).or_default();
            e.0 += 1;
            e.1 += label as usize;
        }
        Some(map.into_iter().map(|(k, (n, p))| (k.to_string(), n, p)).collect())
    }

    /// Subset of rows in the given order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            locations: self.locations.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    pub fn with_records(&self, records: Vec<Record>) -> Result<Dataset> {
        let mut ds = Dataset::from_records(self.schema.clone(), records, self.labels.clone())?;
        ds.locations = self.locations.clone();
        Ok(ds)
    }

    /// Text form of a cell as it appears in the CSV.
    pub fn cell_text(&self, row: usize, var: usize) -> String {
        format_value(&self.schema.variables[var], self.records[row][var])
    }

    /// SHA-256 over the canonical CSV serialization.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        hex_digest(&buf)
    }

    /// Serializes back to CSV (schema column names, target last).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema.variables.iter().map(|v| v.column_name()).collect();
        header.push(self.schema.target.column_name());
        w.write_record(&header).map_err(DatasetError::from)?;
        for (r, rec) in self.records.iter().enumerate() {
            let mut fields: Vec<String> = self
                .schema
                .variables
                .iter()
                .zip(rec)
                .map(|(spec, &v)| format_value(spec, v))
                .collect();
            fields.push(self.schema.target.categories[self.labels[r] as usize].clone());
            w.write_record(&fields).map_err(DatasetError::from)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn format_value(spec: &VariableSpec, v: Value) -> String {
    match v {
        Value::Category(i) => spec.categories[i as usize].clone(),
        // shortest representation that parses back to the same f64
        Value::Number(x) => format!("{x}"),
    }
}

/// Parses one CSV cell against a variable spec.
pub fn parse_cell(spec: &VariableSpec, raw: &str) -> std::result::Result<Value, String> {
    let text = raw.trim();
    if text.is_empty() {
        return Err("missing value".into());
    }
    match spec.kind {
        VariableKind::Numeric => match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Value::Number(v)),
            _ => Err("not a finite number".into()),
        },
        _ => spec
            .category_index(text)
            .map(|i| Value::Category(i as u32))
            .ok_or_else(|| "unknown category".into()),
    }
}

/// Loads and fully validates a CSV file. Either every row is valid or the
/// error lists every invalid cell.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    load_reader(file, schema)
}

pub fn load_reader<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers().map_err(DatasetError::from)?.clone();
    let positions: HashMap<&str, usize> =
        header.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();
    let find = |name: &str| {
        positions.get(name).copied().ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let columns: Vec<usize> = schema
        .variables
        .iter()
        .map(|v| find(v.column_name()))
        .collect::<std::result::Result<_, _>>()?;
    let target_col = find(schema.target.column_name())?;
    let location_col = schema.location_column.as_deref().and_then(|c| positions.get(c).copied());

    let mut records = Vec::new();
    let mut labels = Vec::new();
    let mut locations = location_col.map(|_| Vec::new());
    let mut errors = Vec::new();
    for (row, result) in rdr.records().enumerate() {
        let rec = result.map_err(DatasetError::from)?;
        let mut values = Vec::with_capacity(columns.len());
        for (spec, &col) in schema.variables.iter().zip(&columns) {
            let raw = rec.get(col).unwrap_or("");
            match parse_cell(spec, raw) {
                Ok(v) => values.push(v),
                Err(reason) => errors.push(RowError {
                    row,
                    column: spec.name.clone(),
                    value: raw.to_string(),
                    reason,
                }),
            }
        }
        let raw_target = rec.get(target_col).unwrap_or("").trim();
        match schema.target.categories.iter().position(|c| c == raw_target) {
            Some(i) => labels.push(i == 1),
            None => errors.push(RowError {
                row,
                column: schema.target.name.clone(),
                value: raw_target.to_string(),
                reason: if raw_target.is_empty() {
                    "missing value".into()
                } else {
                    "unknown target category".into()
                },
            }),
        }
        if let (Some(locs), Some(col)) = (locations.as_mut(), location_col) {
            locs.push(rec.get(col).unwrap_or("").trim().to_string());
        }
        if values.len() == columns.len() {
            records.push(values);
        }
    }
    if !errors.is_empty() {
        return Err(DatasetError::Rows(errors).into());
    }
    Ok(Dataset { schema: schema.clone(), records, labels, locations })
}
