use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::harness::{CellResult, EvalConfig};
use super::metrics::{all_negative_baseline, FoldMetrics, MeanStd};
use super::reference::{reference_row, ReferenceRow, REFERENCE_ALL_NEGATIVE};
use crate::container;
use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Version of the report document layout.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_hash: String,
    pub rows: usize,
    pub positives: usize,
    /// SHA-256 of the canonical JSON of settings and cell parameters.
    pub config_hash: String,
    pub artifact_format: u32,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllNegative {
    /// Percent, computed from the loaded labels.
    pub computed: f64,
    pub prevalence: f64,
    /// Percent quoted in the published text.
    pub quoted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    #[serde(flatten)]
    pub result: CellResult,
    pub reference: Option<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub settings: EvalConfig,
    pub seeds: Vec<u64>,
    pub all_negative: AllNegative,
    pub notes: Vec<String>,
    pub cells: Vec<ReportCell>,
}

impl BenchmarkReport {
    pub fn new(ds: &Dataset, cfg: &EvalConfig, seeds: &[u64], results: Vec<CellResult>) -> Result<Self> {
        let settings = serde_json::json!({
            "settings": cfg,
            "seeds": seeds,
            "cells": results.iter().map(|r| serde_json::json!([r.variant, r.family, r.params])).collect::<Vec<_>>(),
        });
        let config_hash = container::hex_digest(settings.to_string().as_bytes());
        let computed = 100.0 * all_negative_baseline(ds)?;
        let prevalence = ds.positives() as f64 / ds.len() as f64;
        let mut notes = vec![
            "Metrics are for the positive (black spot) class, on held-out validation folds that are never augmented."
                .to_string(),
            "Hard labels use a threshold of 0.5 on probability-like scores and 0 on signed margins.".to_string(),
            "The Gaussian Process row is a kernel ridge surrogate on a stratified training subsample.".to_string(),
            format!(
                "All-negative accuracy from the data is {computed:.2}%; the published text quotes {REFERENCE_ALL_NEGATIVE}%, \
                 which does not match its own class counts."
            ),
            "std is the population standard deviation over all folds of all seeds.".to_string(),
        ];
        if let Some(cap) = results.iter().filter_map(|r| r.cap).max() {
            notes.push(format!("Kernel families train on at most {cap} stratified subsampled rows per fold."));
        }
        let cells = results
            .into_iter()
            .map(|r| {
                let reference = reference_row(r.variant, &r.family);
                ReportCell { result: r, reference }
            })
            .collect();
        Ok(BenchmarkReport {
            schema_version: FORMAT_VERSION,
            provenance: Provenance {
                dataset_hash: ds.content_hash(),
                rows: ds.len(),
                positives: ds.positives(),
                config_hash,
                artifact_format: container::FORMAT_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            settings: cfg.clone(),
            seeds: seeds.to_vec(),
            all_negative: AllNegative { computed, prevalence, quoted: REFERENCE_ALL_NEGATIVE },
            notes,
            cells,
        })
    }

    pub fn errored(&self) -> usize {
        self.cells.iter().filter(|c| c.result.error.is_some()).count()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("unreadable report: {e}")))
    }

    /// Aligned plain-text table, two decimals, reference values on the line below.
    pub fn to_text(&self) -> String {
        let head = ["Acc", "Prec", "Rec", "F1", "AUC"];
        let mut rows: Vec<[String; 7]> = Vec::new();
        rows.push(["Block".into(), "Method".into(), head[0].into(), head[1].into(), head[2].into(), head[3].into(), head[4].into()]);
        for c in &self.cells {
            let r = &c.result;
            let mut line: [String; 7] = Default::default();
            line[0] = r.variant.label().to_string();
            line[1] = r.label.clone();
            match (&r.summary, &r.error) {
                (Some(s), _) => {
                    for (k, m) in s.values().iter().enumerate() {
                        line[2 + k] = mean_std_text(m);
                    }
                }
                (None, Some(e)) => line[2] = format!("error: {e}"),
                (None, None) => {}
            }
            rows.push(line);
            if let Some(p) = c.reference {
                let mut line: [String; 7] = Default::default();
                line[1] = "  reference".into();
                for (k, v) in p.values().iter().enumerate() {
                    line[2 + k] = format!("{v:.2}");
                }
                rows.push(line);
            }
        }
        let widths: Vec<usize> = (0..7).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &rows {
            let mut line = String::new();
            for j in 0..7 {
                if j > 0 {
                    line.push_str("  ");
                }
                let _ = write!(line, "{:<w$}", r[j], w = widths[j]);
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\nAll-negative accuracy: {:.2}% computed, {:.1}% quoted. Seeds: {:?}.",
            self.all_negative.computed, self.all_negative.quoted, self.seeds
        );
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["variant".to_string(), "family".into(), "label".into(), "seeds".into(), "cap".into()];
        for n in FoldMetrics::NAMES {
            header.push(format!("{n}_mean"));
            header.push(format!("{n}_std"));
        }
        for n in FoldMetrics::NAMES {
            header.push(format!("reference_{n}"));
        }
        header.push("error".into());
        w.write_record(&header).map_err(csv_err)?;
        for c in &self.cells {
            let r = &c.result;
            let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
            let mut rec = vec![
                r.variant.name().to_string(),
                r.family.clone(),
                r.label.clone(),
                seeds.join(" "),
                r.cap.map(|c| c.to_string()).unwrap_or_default(),
            ];
            match &r.summary {
                Some(s) => {
                    for m in s.values() {
                        rec.push(format!("{:.2}", m.mean));
                        rec.push(format!("{:.2}", m.std));
                    }
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 10)),
            }
            match c.reference {
                Some(p) => rec.extend(p.values().iter().map(|v| format!("{v}"))),
                None => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
    }
}

fn mean_std_text(m: &MeanStd) -> String {
    format!("{:.2} ({:.2})", m.mean, m.std)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
