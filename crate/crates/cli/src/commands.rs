use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use bsng_core::dataset::{load_csv, parse_cell, profile as profile_dataset, VariableSummary};
use bsng_core::encoding::{audit_csv, audit_width, fit_encoding, ColumnEncoder, EncodingMode};
use bsng_core::evaluation::{
    benchmark as run_benchmark, default_cells, expand_grid, grid_search, BenchmarkReport, Cell, Variant,
};
use bsng_core::augment::augment_training;
use bsng_core::numerics::RngState;
use bsng_core::pipeline::{fit_proposed_with_stats, load_artifact, save_artifact, PipelineArtifact};
use bsng_core::{DatasetError, Error};
use serde::Serialize;

use crate::config::{require_file, RunArgs, RunConfig};
use crate::CliError;

fn write_out(cfg: &RunConfig, name: &str, contents: &str) -> Result<(), CliError> {
    let dir = cfg.create_out()?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

pub fn validate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let schema = cfg.schema()?;
    let path = cfg.dataset_path()?;
    let mut report = String::new();
    let outcome = match load_csv(path, &schema) {
        Ok(ds) => {
            let _ = writeln!(report, "{} rows, {} positive", ds.len(), ds.positives());
            if let (Some(rows), Some(pos)) = (schema.expected_rows, schema.expected_positives) {
                if rows != ds.len() || pos != ds.positives() {
                    let _ = writeln!(
                        report,
                        "published totals are {rows} rows, {pos} positive; this file has {} rows, {} positive",
                        ds.len(),
                        ds.positives()
                    );
                }
            }
            if let Some(groups) = ds.location_counts() {
                let _ = writeln!(report, "{} locations", groups.len());
            }
            Ok(())
        }
        Err(Error::Dataset(DatasetError::Rows(errors))) => {
            for e in &errors {
                let _ = writeln!(report, "{e}");
            }
            let rows: std::collections::BTreeSet<usize> = errors.iter().map(|e| e.row).collect();
            let _ = writeln!(report, "{} invalid cell(s) in {} row(s)", errors.len(), rows.len());
            Err(CliError::data(format!("{} invalid row(s)", rows.len())))
        }
        Err(e) => Err(CliError::from(e)),
    };
    print!("{report}");
    if cfg.out_given {
        write_out(&cfg, "validation.txt", &report)?;
    }
    outcome
}

pub fn profile(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let ds = cfg.load()?;
    let p = profile_dataset(&ds)?;
    let width = p.variables.iter().map(|v| v.name.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = writeln!(out, "{} rows, {} positive ({:.2}%)", p.rows, p.positives, 100.0 * p.prevalence);
    for v in &p.variables {
        let kind = format!("{:?}", v.kind).to_ascii_lowercase();
        let detail = match &v.summary {
            VariableSummary::Categorical { mode, .. } => format!("mode {mode}"),
            VariableSummary::Numeric { mean, min, max } => format!("mean {mean:.2}  min {min}  max {max}"),
        };
        let _ = writeln!(out, "{:<width$}  {kind:<11}  {detail}", v.name);
    }
    print!("{out}");
    if cfg.out_given {
        write_out(&cfg, "profile.txt", &out)?;
    }
    Ok(())
}

pub fn audit(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let schema = cfg.schema()?;
    let a = audit_width(&schema);
    let observed = match &cfg.dataset {
        Some(p) => {
            require_file(p)?;
            let f = std::fs::File::open(p).map_err(|e| CliError::data(e.to_string()))?;
            Some(audit_csv(f, &schema)?)
        }
        None => None,
    };
    let width = a.variables.iter().map(|(n, _)| n.chars().count()).max().unwrap_or(8).max(8);
    let mut out = String::new();
    let _ = write!(out, "{:<width$}  {:>5}", "variable", "width");
    if observed.is_some() {
        let _ = write!(out, "  {:>8}  unknown values", "observed");
    }
    out.push('\n');
    for (i, (name, w)) in a.variables.iter().enumerate() {
        let _ = write!(out, "{name:<width$}  {w:>5}");
        if let Some(obs) = &observed {
            let o = &obs[i];
            let _ = write!(out, "  {:>8}  {}", o.distinct, o.unknown.join(", "));
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
    }
    let _ = write!(out, "total width {}", a.total);
    if let (Some(expected), Some(res)) = (a.expected, a.residual()) {
        let _ = write!(out, ", expected {expected}, residual {res}");
    }
    out.push('\n');
    if let Some(obs) = &observed {
        let every: usize = obs.iter().map(|o| o.distinct).sum();
        let unknown: usize = obs.iter().map(|o| o.unknown.len()).sum();
        let _ = writeln!(out, "width with one column per observed value of every variable: {every}");
        let _ = writeln!(out, "values missing from the schema: {unknown}");
    }
    print!("{out}");
    if cfg.out_given {
        write_out(&cfg, "audit.txt", &out)?;
    }
    Ok(())
}

fn column_names(cols: &[ColumnEncoder], mode: EncodingMode) -> Vec<String> {
    cols.iter()
        .flat_map(|c| match (c, mode) {
            (ColumnEncoder::Categories { name, categories, .. }, EncodingMode::Onehot) => {
                categories.iter().map(|k| format!("{name}={k}")).collect()
            }
            _ => vec![c.name().to_string()],
        })
        .collect()
}

pub fn encode(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let variant = cfg.single_variant("encode")?;
    if variant == Variant::Proposed {
        return Err(CliError::usage("`encode` supports original, onehot and augmented"));
    }
    let ds = cfg.load()?;
    let rows: Vec<usize> = (0..ds.len()).collect();
    let plan = fit_encoding(&ds, &rows)?;
    let mode = variant.encoding_mode();
    let enc = plan.transform(&ds, mode)?;
    let y: Vec<f64> = ds.labels().iter().map(|&l| l as u8 as f64).collect();
    let (x, y) = if variant == Variant::Augmented {
        let seed = cfg.single_seed("encode --variant augmented")?;
        augment_training(&enc.matrix, &y, &cfg.eval.mixup, &RngState::new(seed).fork_named("mixup"))?
    } else {
        (enc.matrix, y)
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = column_names(&plan.columns, mode);
    header.push(ds.schema().target.name.clone());
    let csv_err = |e: csv::Error| CliError::data(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (row, label) in x.iter_rows().zip(&y) {
        w.write_record(row.iter().chain([label]).map(|v| v.to_string())).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    let name = format!("encoded_{variant}.csv");
    write_out(&cfg, &name, &String::from_utf8(bytes).expect("ascii numbers"))?;
    println!(
        "{} rows x {} columns ({} clipped cells), written to {}",
        x.rows(),
        x.cols(),
        enc.clipped,
        cfg.out.join(name).display()
    );
    Ok(())
}

pub fn train(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let seed = cfg.single_seed("train")?;
    let ds = cfg.load()?;
    let bsng_core::evaluation::Method::Proposed(mut pc) = cfg.method("proposed")? else {
        unreachable!("proposed method")
    };
    pc.seed = seed;
    let rows: Vec<usize> = (0..ds.len()).collect();
    let (artifact, stats) = fit_proposed_with_stats(&ds, &rows, &pc)?;
    cfg.create_out()?;
    let path = cfg.out.join("proposed.bsng");
    save_artifact(&artifact, &path)?;
    println!("trained on {} rows, input width {}", stats.training_rows, stats.input_width);
    println!("head trained on {} rows of width {}", stats.head_rows, stats.head_width);
    if let (Some(a), Some(h)) = (stats.autoencoder_loss.last(), stats.head_loss.last()) {
        println!("final losses: autoencoder {a:.6}, head {h:.6}");
    }
    println!("fingerprint {}", artifact.fingerprint);
    println!("artifact written to {}", path.display());
    Ok(())
}

pub fn predict(args: &RunArgs, artifact_path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    require_file(artifact_path)?;
    let artifact = load_artifact(artifact_path).map_err(|e| CliError::data(e.to_string()))?;
    let schema = cfg.schema()?;
    artifact.plan.check_schema(&schema).map_err(|e| CliError::data(e.to_string()))?;
    let path = cfg.dataset_path()?;

    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::data(e.to_string()))?;
    let header = rdr.headers().map_err(|e| CliError::data(e.to_string()))?.clone();
    let cols: Vec<usize> = schema
        .variables
        .iter()
        .map(|v| {
            header
                .iter()
                .position(|h| h.trim() == v.column_name())
                .ok_or_else(|| CliError::data(format!("missing column '{}' for variable '{}'", v.column_name(), v.name)))
        })
        .collect::<Result<_, _>>()?;
    let mut raw = Vec::new();
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::data(e.to_string()))?;
        let mut values = Vec::with_capacity(cols.len());
        for (spec, &c) in schema.variables.iter().zip(&cols) {
            let cell = rec.get(c).unwrap_or("");
            match parse_cell(spec, cell) {
                Ok(v) => values.push(v),
                Err(reason) => problems.push(format!("row {i} variable '{}': {reason} (value {cell:?})", spec.name)),
            }
        }
        records.push(values);
        raw.push(rec);
    }
    if !problems.is_empty() {
        for p in problems.iter().take(20) {
            eprintln!("{p}");
        }
        return Err(CliError::data(format!("{} invalid cell(s); first: {}", problems.len(), problems[0])));
    }
    let x = artifact.plan.transform_records(&records, EncodingMode::Onehot)?.matrix;
    let scores = artifact.score_encoded(&x)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::data(e.to_string());
    w.write_record(header.iter().chain(["score", "label"])).map_err(csv_err)?;
    let names = &schema.target.categories;
    for (rec, s) in raw.iter().zip(&scores) {
        let label = &names[(*s >= PipelineArtifact::THRESHOLD) as usize];
        w.write_record(rec.iter().chain([s.to_string().as_str(), label.as_str()])).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::data(e.to_string()))?;
    write_out(&cfg, "predictions.csv", &String::from_utf8_lossy(&bytes))?;
    let positive = scores.iter().filter(|&&s| s >= PipelineArtifact::THRESHOLD).count();
    println!(
        "scored {} rows, {positive} labelled {}; written to {}",
        scores.len(),
        names[1],
        cfg.out.join("predictions.csv").display()
    );
    Ok(())
}

fn cell_for(cfg: &RunConfig, variant: Variant, family: &str) -> Result<Cell, CliError> {
    Cell::new(variant, cfg.method(family)?).map_err(|e| CliError::usage(e.to_string()))
}

pub fn evaluate(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let variant = cfg.single_variant("evaluate")?;
    let seeds = cfg.require_seeds("evaluate")?.to_vec();
    let families: Vec<String> = if cfg.families.is_empty() {
        default_cells().iter().filter(|c| c.variant == variant).map(|c| c.method.name().to_string()).collect()
    } else {
        cfg.families.clone()
    };
    let cells = families.iter().map(|f| cell_for(&cfg, variant, f)).collect::<Result<Vec<_>, _>>()?;
    let ds = cfg.load()?;
    let results = run_benchmark(&ds, &cells, &seeds, &cfg.eval)?;
    let report = BenchmarkReport::new(&ds, &cfg.eval, &seeds, results)?;

    let mut out = String::new();
    for c in &report.cells {
        let r = &c.result;
        let _ = writeln!(out, "{} ({})", r.label, r.variant.label());
        for run in &r.runs {
            for (i, f) in run.folds.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "  seed {} fold {i}: acc {:.2}  prec {:.2}  rec {:.2}  f1 {:.2}  auc {:.2}",
                    run.seed, f.accuracy, f.precision, f.recall, f.f1, f.auc
                );
            }
        }
        if let Some(e) = &r.error {
            let _ = writeln!(out, "  error: {e}");
        }
    }
    out.push('\n');
    out.push_str(&report.to_text());
    print!("{out}");
    write_out(&cfg, "evaluate.json", &report.to_json())?;
    write_out(&cfg, "evaluate.txt", &out)?;
    match report.errored() {
        0 => Ok(()),
        n => Err(CliError::data(format!("{n} cell(s) failed"))),
    }
}

/// Default table cells restricted to the requested variants and families.
pub fn select_cells(cfg: &RunConfig) -> Result<Vec<Cell>, CliError> {
    let cells: Vec<Cell> = default_cells()
        .into_iter()
        .filter(|c| cfg.variants.is_empty() || cfg.variants.contains(&c.variant))
        .filter(|c| cfg.families.is_empty() || cfg.families.iter().any(|f| f == c.method.name()))
        .map(|c| cell_for(cfg, c.variant, c.method.name()))
        .collect::<Result<_, _>>()?;
    if cells.is_empty() {
        return Err(CliError::usage("no table cell matches the requested variants and families"));
    }
    Ok(cells)
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
    workers: usize,
    cells: usize,
    seeds: usize,
}

pub fn benchmark(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let seeds = cfg.require_seeds("benchmark")?.to_vec();
    let cells = select_cells(&cfg)?;
    let ds = cfg.load()?;
    let start = Instant::now();
    let results = run_benchmark(&ds, &cells, &seeds, &cfg.eval)?;
    let report = BenchmarkReport::new(&ds, &cfg.eval, &seeds, results)?;
    let timing = Timing {
        seconds: start.elapsed().as_secs_f64(),
        workers: cfg.eval.workers,
        cells: cells.len(),
        seeds: seeds.len(),
    };
    let text = report.to_text();
    print!("{text}");
    write_out(&cfg, "benchmark.json", &report.to_json())?;
    write_out(&cfg, "benchmark.txt", &text)?;
    write_out(&cfg, "benchmark.csv", &report.to_csv()?)?;
    write_out(&cfg, "benchmark.timing.json", &json(&timing))?;
    println!("{} cells in {:.1} s, reports in {}", cells.len(), timing.seconds, cfg.out.display());
    match report.errored() {
        0 => Ok(()),
        n => Err(CliError::data(format!("{n} cell(s) failed"))),
    }
}

fn read_grid(path: &Path) -> Result<Vec<BTreeMap<String, serde_json::Value>>, CliError> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(e.to_string()))?;
    let table: BTreeMap<String, serde_json::Value> =
        toml::from_str(&text).map_err(|e| CliError::usage(format!("grid {}: {e}", path.display())))?;
    let axes: BTreeMap<String, Vec<serde_json::Value>> = table
        .into_iter()
        .map(|(k, v)| match v {
            serde_json::Value::Array(a) => (k, a),
            other => (k, vec![other]),
        })
        .collect();
    let points = if axes.is_empty() { Vec::new() } else { expand_grid(&axes) };
    if points.is_empty() {
        return Err(CliError::usage(format!("grid {} has no points", path.display())));
    }
    Ok(points)
}

#[derive(Serialize)]
struct TunePoint<'a> {
    overrides: &'a BTreeMap<String, serde_json::Value>,
    mean_f1: Option<f64>,
    mean_auc: Option<f64>,
    error: Option<&'a str>,
}

pub fn tune(args: &RunArgs, grid_path: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let variant = cfg.single_variant("tune")?;
    let seed = cfg.single_seed("tune")?;
    let family = match cfg.families.as_slice() {
        [f] => f.clone(),
        _ => return Err(CliError::usage("`tune` needs exactly one family in --families")),
    };
    let grid = read_grid(grid_path)?;
    let method = cell_for(&cfg, variant, &family)?.method;
    let ds = cfg.load()?;
    let result = grid_search(&method, &grid, variant, &ds, &cfg.eval, seed)?;

    let mut out = String::new();
    let points: Vec<TunePoint> = result
        .points
        .iter()
        .map(|p| TunePoint {
            overrides: &p.overrides,
            mean_f1: p.result.mean_f1(),
            mean_auc: p.result.mean_auc(),
            error: p.result.error.as_deref(),
        })
        .collect();
    for (i, p) in points.iter().enumerate() {
        let o = serde_json::to_string(p.overrides).expect("json");
        match (p.mean_f1, p.mean_auc, p.error) {
            (Some(f1), Some(auc), _) => {
                let _ = writeln!(out, "point {i} {o}: mean F1 {f1:.2}, mean AUC {auc:.2}");
            }
            (_, _, e) => {
                let _ = writeln!(out, "point {i} {o}: error: {}", e.unwrap_or("unknown"));
            }
        }
    }
    let sel = result.selection();
    let _ = writeln!(out, "selected point {}: {}", result.best, serde_json::to_string(&sel.overrides).expect("json"));
    print!("{out}");
    let doc = serde_json::json!({
        "family": family,
        "variant": variant,
        "seed": seed,
        "selection": sel.overrides,
        "best": result.best,
        "points": points,
        "results": result,
    });
    write_out(&cfg, "tune.json", &json(&doc))?;
    write_out(&cfg, "tune.txt", &out)?;
    Ok(())
}
