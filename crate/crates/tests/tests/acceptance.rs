//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria that need the published accident table read it from `BSNG_CSV` or
//! `data/bsng.csv` under the workspace root and fail when it is absent. Run with
//! `--release` when the table is present; the performance criteria train the
//! full-size networks.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use bsng_core::augment::{augment_with_parents, mixup_pair, MixupConfig, MixupMode};
use bsng_core::baselines::{Family, ModelSpec};
use bsng_core::dataset::{bsng_schema, load_csv, stratified_kfold, synthetic_dataset, Dataset, Value};
use bsng_core::encoding::{audit_width, fit_encoding, EncodingMode};
use bsng_core::evaluation::{
    all_negative_baseline, compute_metrics, cross_validate, fold_state, prepare_fold, reference_row, BenchmarkReport,
    Cell, EvalConfig, Method, Variant,
};
use bsng_core::neural::{Activation, LayerSpec, Loss, Network};
use bsng_core::numerics::{finite_difference_grad, Matrix, PcaModel, RngState};
use bsng_core::pipeline::{ProposedConfig, StageTraining};

const PUBLISHED_ROWS: usize = 1811;
const PUBLISHED_POSITIVES: usize = 142;
const SEEDS: [u64; 3] = [1, 2, 3];

type Check = Result<String, String>;

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root")
}

fn published_csv() -> Option<PathBuf> {
    let p = std::env::var_os("BSNG_CSV").map(PathBuf::from).unwrap_or_else(|| workspace_root().join("data/bsng.csv"));
    p.is_file().then_some(p)
}

fn require_published() -> Result<(PathBuf, Dataset), String> {
    let path = published_csv()
        .ok_or("published BSNG CSV not found (set BSNG_CSV or place it at data/bsng.csv)".to_string())?;
    let ds = load_csv(&path, &bsng_schema()).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((path, ds))
}

fn bsng_binary() -> Result<PathBuf, String> {
    let exe = std::env::current_exe().map_err(|e| e.to_string())?;
    let dir = exe.parent().and_then(Path::parent).ok_or("no target directory")?;
    let bin = dir.join(format!("bsng{}", std::env::consts::EXE_SUFFIX));
    if !bin.is_file() {
        let cargo = std::env::var_os("CARGO").unwrap_or_else(|| "cargo".into());
        let mut build = Command::new(cargo);
        build.args(["build", "-q", "-p", "bsng-cli"]).current_dir(workspace_root());
        if !cfg!(debug_assertions) {
            build.arg("--release");
        }
        let status = build.status().map_err(|e| format!("cannot run cargo: {e}"))?;
        if !status.success() || !bin.is_file() {
            return Err(format!("{} not built (cargo build -p bsng-cli)", bin.display()));
        }
    }
    Ok(bin)
}

fn within(limit: Duration, took: Duration, what: &str) -> Result<(), String> {
    if took <= limit {
        Ok(())
    } else {
        Err(format!("{what} took {:.1} s, limit {:.0} s", took.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn dataset_integrity() -> Check {
    let path = published_csv()
        .ok_or("published BSNG CSV not found (set BSNG_CSV or place it at data/bsng.csv)".to_string())?;
    let bin = bsng_binary()?;
    let start = Instant::now();
    let out = Command::new(bin)
        .args(["validate", "--dataset"])
        .arg(&path)
        .output()
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let first = text.lines().next().unwrap_or("").to_string();
    if !out.status.success() {
        return Err(format!("validate exited {:?}: {first}", out.status.code()));
    }
    let want = format!("{PUBLISHED_ROWS} rows, {PUBLISHED_POSITIVES} positive");
    if first != want {
        return Err(format!("validate reported '{first}', published totals '{want}'"));
    }
    within(Duration::from_secs(5), took, "validate")?;
    Ok(format!("{first} in {:.2} s", took.as_secs_f64()))
}

fn encoding_width() -> Check {
    let schema = bsng_schema();
    let start = Instant::now();
    let (ds, source) = match published_csv() {
        Some(_) => (require_published()?.1, "published CSV"),
        None => (synthetic_dataset(&schema, PUBLISHED_ROWS, PUBLISHED_POSITIVES, 1).map_err(|e| e.to_string())?, "synthetic rows"),
    };
    let rows: Vec<usize> = (0..ds.len()).collect();
    let plan = fit_encoding(&ds, &rows).map_err(|e| e.to_string())?;
    let width = plan.transform(&ds, EncodingMode::Onehot).map_err(|e| e.to_string())?.matrix.cols();
    let took = start.elapsed();
    let audit = audit_width(&schema);
    if width != 687 {
        return Err(format!(
            "fitted one-hot width {width} on {source}, expected 687 (residual {}); `bsng audit` lists per-variable widths",
            audit.residual().unwrap_or(0)
        ));
    }
    within(Duration::from_secs(5), took, "encoding")?;
    Ok(format!("width {width}"))
}

fn augmentation_count() -> Check {
    let ds = match published_csv() {
        Some(_) => require_published()?.1,
        None => synthetic_dataset(&bsng_schema(), PUBLISHED_ROWS, PUBLISHED_POSITIVES, 3).map_err(|e| e.to_string())?,
    };
    let cfg = EvalConfig::default();
    let master = RngState::new(11);
    let plan = stratified_kfold(ds.labels(), 5, &mut master.fork_named("folds")).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for fold in 0..5 {
        let (train, val) = (plan.train_indices(fold), plan.validation_indices(fold));
        let start = Instant::now();
        let data = prepare_fold(&ds, Variant::Augmented, &train, &val, &cfg, &master.fork(fold as u64), false)
            .map_err(|e| e.to_string())?;
        within(Duration::from_secs(30), start.elapsed(), &format!("fold {fold}"))?;
        let want = train.len() + 66_000;
        if data.train_x.rows() != want || data.train_y.len() != want {
            return Err(format!("fold {fold}: {} training rows, expected {want}", data.train_x.rows()));
        }
        if data.val_x.rows() != val.len() {
            return Err(format!("fold {fold}: validation set changed size"));
        }
        seen.push((train.len(), data.train_x.rows()));
    }
    if ds.len() == PUBLISHED_ROWS && !seen.iter().any(|&(t, a)| t == 1448 && a == 67_448) {
        return Err(format!("no 1448-row fold among {seen:?}"));
    }
    Ok(format!("(train, augmented) per fold {seen:?}"))
}

fn mean_over_seeds(method: &Method, variant: Variant, ds: &Dataset, cfg: &EvalConfig) -> Result<[f64; 5], String> {
    let mut sum = [0.0; 5];
    for seed in SEEDS {
        let r = cross_validate(method, variant, ds, cfg, seed).map_err(|e| format!("seed {seed}: {e}"))?;
        let s = r.summary.ok_or("no summary")?;
        for (acc, m) in sum.iter_mut().zip(s.values()) {
            *acc += m.mean;
        }
    }
    Ok(sum.map(|v| v / SEEDS.len() as f64))
}

fn eval_config() -> EvalConfig {
    EvalConfig {
        workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        cap: Some(4000),
        ..EvalConfig::default()
    }
}

fn proposed_band() -> Check {
    let (_, ds) = require_published()?;
    let start = Instant::now();
    let m = mean_over_seeds(&Method::Proposed(ProposedConfig::default()), Variant::Proposed, &ds, &eval_config())?;
    let took = start.elapsed();
    let reference = reference_row(Variant::Proposed, "proposed").expect("reference row");
    let detail = format!("F1 {:.2} (reference {}), AUC {:.2} (reference {})", m[3], reference.f1, m[4], reference.auc);
    if m[3] < 45.0 || m[4] < 65.0 {
        return Err(format!("{detail}; needs F1 >= 45 and AUC >= 65"));
    }
    within(Duration::from_secs(45 * 60), took, "proposed cross-validation")?;
    Ok(detail)
}

fn baseline_bands() -> Check {
    let (_, ds) = require_published()?;
    let cfg = eval_config();
    let start = Instant::now();
    // (variant, family, metric index, target, tolerance)
    let bands = [
        (Variant::Original, Family::DecisionTree, 0, 76.03, 6.0),
        (Variant::Onehot, Family::RandomForest, 0, 80.16, 5.0),
        (Variant::Onehot, Family::RandomForest, 3, 32.07, 8.0),
        (Variant::Augmented, Family::NaiveBayes, 2, 79.03, 10.0),
    ];
    let names = ["accuracy", "precision", "recall", "f1", "auc"];
    let mut lines = Vec::new();
    let mut missed = Vec::new();
    let mut cache: Vec<((Variant, Family), [f64; 5])> = Vec::new();
    for (variant, family, k, target, tol) in bands {
        let means = match cache.iter().find(|(key, _)| *key == (variant, family)) {
            Some((_, m)) => *m,
            None => {
                let m = mean_over_seeds(&Method::Baseline(ModelSpec::defaults(family)), variant, &ds, &cfg)?;
                cache.push(((variant, family), m));
                m
            }
        };
        let line = format!("{variant}/{family} {} {:.2} (reference {target} ± {tol})", names[k], means[k]);
        if (means[k] - target).abs() > tol {
            let reference = reference_row(variant, family.name()).expect("reference row").values();
            let diff: Vec<String> = (0..5).map(|i| format!("{} {:+.2}", names[i], means[i] - reference[i])).collect();
            missed.push(format!("{line}; diff vs reference row: {}", diff.join(", ")));
        }
        lines.push(line);
    }
    within(Duration::from_secs(60 * 60), start.elapsed(), "baseline cells")?;
    if missed.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(missed.join(" | "))
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut RngState) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).unwrap()
}

fn metric_oracle() -> Check {
    let mut rng = RngState::new(600);
    for case in 0..200 {
        let n = 2 + rng.below(60);
        let mut truth: Vec<bool> = (0..n).map(|_| rng.uniform() < 0.3).collect();
        truth[0] = true;
        truth[1] = false;
        // coarse scores so that ties occur
        let scores: Vec<f64> = (0..n).map(|_| rng.below(7) as f64 / 6.0).collect();
        let m = compute_metrics(&truth, &scores, 0.5).map_err(|e| e.to_string())?;
        let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for (&t, &s) in truth.iter().zip(&scores) {
            match (t, s >= 0.5) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let c = m.confusion;
        if (c.tp, c.fp, c.fn_, c.tn) != (tp, fp, fn_, tn) {
            return Err(format!("case {case}: confusion {c:?}"));
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let expect = [100.0 * ratio(tp + tn, n), 100.0 * p, 100.0 * r, 100.0 * f1];
        if m.values()[..4] != expect {
            return Err(format!("case {case}: {:?} vs {expect:?}", &m.values()[..4]));
        }
        let (mut good, mut pairs) = (0.0, 0.0);
        for i in (0..n).filter(|&i| truth[i]) {
            for j in (0..n).filter(|&j| !truth[j]) {
                pairs += 1.0;
                good += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
        if (m.auc / 100.0 - good / pairs).abs() > 1e-12 {
            return Err(format!("case {case}: AUC {} vs pair count {}", m.auc / 100.0, good / pairs));
        }
    }
    Ok("200 vectors".into())
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn gradient_checks() -> Check {
    let mut rng = RngState::new(601);
    let hidden = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Linear];
    let (mut arch, mut redrawn) = (0, 0);
    while arch < 10 {
        let input = 2 + rng.below(5);
        let depth = 1 + rng.below(3);
        let mut specs: Vec<LayerSpec> =
            (0..depth).map(|_| LayerSpec::new(1 + rng.below(6), hidden[rng.below(hidden.len())])).collect();
        // even architectures are autoencoders, odd ones classifiers
        let (loss, out_width) = if arch % 2 == 0 { (Loss::Mse, input) } else { (Loss::BinaryCrossEntropy, 1) };
        specs.push(LayerSpec::new(out_width, Activation::Sigmoid));
        let mut net = Network::init(input, &specs, &mut rng).map_err(|e| e.to_string())?;
        // nonzero biases keep dead units from parking a ReLU exactly on its kink
        let jittered: Vec<f64> = net.params_flat().iter().map(|w| w + rng.uniform_range(-0.1, 0.1)).collect();
        net.set_params_flat(&jittered).map_err(|e| e.to_string())?;
        let x = random_matrix(8, input, &mut rng);
        let t = Matrix::new(8, out_width, (0..8 * out_width).map(|_| rng.uniform()).collect()).unwrap();
        let fwd = net.forward(&x).map_err(|e| e.to_string())?;
        let kink = net
            .layers
            .iter()
            .zip(&fwd.pre)
            .filter(|(l, _)| l.activation == Activation::Relu)
            .flat_map(|(_, p)| p.as_slice().iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min);
        // finite differences straddling a ReLU kink measure nothing useful
        if kink < 1e-3 {
            redrawn += 1;
            continue;
        }
        let (_, g) = net.backprop(&x, &t, loss).map_err(|e| e.to_string())?;
        let mut probe = net.clone();
        let fd = finite_difference_grad(
            |p| {
                probe.set_params_flat(p).unwrap();
                probe.loss(&x, &t, loss).unwrap()
            },
            &net.params_flat(),
            1e-5,
        );
        let err = relative_error(&g.flatten(), &fd);
        if err > 1e-4 {
            return Err(format!("architecture {arch} ({input} -> {:?}, {loss:?}): relative error {err:e}", net.specs()));
        }
        arch += 1;
    }
    Ok(format!("10 architectures, {redrawn} redrawn near a ReLU kink"))
}

fn mixup_invariants() -> Check {
    let mut rng = RngState::new(602);
    for case in 0..100 {
        // at least two rows per class, which intra-class pairing needs
        let n = 4 + rng.below(30);
        let d = 1 + rng.below(6);
        let x = random_matrix(n, d, &mut rng);
        let mut y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        rng.shuffle(&mut y);
        let cfg = MixupConfig {
            pairs: rng.below(40),
            copies_per_pair: 1 + rng.below(5),
            alpha: rng.uniform_range(0.1, 2.0),
            beta: rng.uniform_range(0.1, 2.0),
            mode: if rng.uniform() < 0.5 { MixupMode::Uniform } else { MixupMode::IntraClass },
        };
        let a = augment_with_parents(&x, &y, &cfg, &rng.fork(case)).map_err(|e| format!("case {case}: {e}"))?;
        if a.matrix.rows() != n + cfg.pairs * cfg.copies_per_pair || a.labels.len() != a.matrix.rows() {
            return Err(format!("case {case}: {} rows", a.matrix.rows()));
        }
        if a.matrix.as_slice()[..n * d] != *x.as_slice() || a.labels[..n] != y[..] {
            return Err(format!("case {case}: originals changed"));
        }
        for (s, &(i, j)) in a.parents.iter().enumerate() {
            let row = a.matrix.row(n + s);
            for c in 0..d {
                let (lo, hi) = (x.get(i, c).min(x.get(j, c)), x.get(i, c).max(x.get(j, c)));
                if row[c] < lo || row[c] > hi {
                    return Err(format!("case {case}: synthetic row {s} leaves the hull"));
                }
            }
            let l = a.labels[n + s];
            if l < y[i].min(y[j]) || l > y[i].max(y[j]) {
                return Err(format!("case {case}: synthetic label {l} leaves the hull"));
            }
            if cfg.mode == MixupMode::IntraClass && y[i] != y[j] {
                return Err(format!("case {case}: intra-class pair mixes classes"));
            }
        }
        let (r1, r2) = (x.row(0), x.row(1));
        let one = mixup_pair(r1, r2, y[0], y[1], 1.0).map_err(|e| e.to_string())?;
        let zero = mixup_pair(r1, r2, y[0], y[1], 0.0).map_err(|e| e.to_string())?;
        if one != (r1.to_vec(), y[0]) || zero != (r2.to_vec(), y[1]) {
            return Err(format!("case {case}: endpoints are not the parents"));
        }
    }
    Ok("100 configurations".into())
}

fn pca_oracle() -> Check {
    let mut rng = RngState::new(603);
    for case in 0..20 {
        let d = 2 + rng.below(7);
        let n = d + 5 + rng.below(30);
        let x = random_matrix(n, d, &mut rng);
        let model = PcaModel::fit(&x, d).map_err(|e| e.to_string())?;
        let back = model.inverse_transform(&model.transform(&x).unwrap()).unwrap();
        let worst = back.as_slice().iter().zip(x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if worst > 1e-8 {
            return Err(format!("case {case}: round trip error {worst:e}"));
        }
        let dense = nalgebra::DMatrix::from_row_slice(n, d, x.as_slice());
        let mean = dense.row_mean();
        let mut centered = dense.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let mut oracle: Vec<f64> = nalgebra::SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.total_cmp(a));
        for (k, (a, b)) in model.explained_variance.iter().zip(&oracle).enumerate() {
            if (a - b).abs() > 1e-8 {
                return Err(format!("case {case}: eigenvalue {k} is {a}, oracle {b}"));
            }
        }
    }
    Ok("20 matrices".into())
}

fn tiny_proposed() -> ProposedConfig {
    let t = StageTraining { learning_rate: 1e-2, epochs: 3, batch_size: 16 };
    ProposedConfig {
        encoder: vec![16, 4],
        head: vec![4],
        autoencoder_training: t,
        head_training: t,
        mixup: MixupConfig { pairs: 30, copies_per_pair: 2, ..MixupConfig::default() },
        seed: 0,
    }
}

fn leakage_guard() -> Check {
    let schema = bsng_schema();
    let ds = synthetic_dataset(&schema, 150, 30, 604).map_err(|e| e.to_string())?;
    let donor = synthetic_dataset(&schema, 150, 30, 605).map_err(|e| e.to_string())?;
    let cfg = EvalConfig { mixup: MixupConfig { pairs: 50, copies_per_pair: 3, ..MixupConfig::default() }, ..EvalConfig::default() };
    let seed = 17;
    let plan = stratified_kfold(ds.labels(), 5, &mut RngState::new(seed).fork_named("folds")).map_err(|e| e.to_string())?;
    let cells = [
        Cell::new(Variant::Original, Method::Baseline(ModelSpec::defaults(Family::LinearSvm))),
        Cell::new(Variant::Onehot, Method::Baseline(ModelSpec::defaults(Family::LinearSvm))),
        Cell::new(Variant::Augmented, Method::Baseline(ModelSpec::defaults(Family::LinearSvm))),
        Cell::new(Variant::Proposed, Method::Proposed(tiny_proposed())),
    ];
    let mut checked = 0;
    for cell in cells {
        let cell = cell.map_err(|e| e.to_string())?;
        for fold in 0..5 {
            let mut records = ds.records().to_vec();
            for r in plan.validation_indices(fold) {
                let mut rec = donor.records()[r].clone();
                // push numeric cells far outside the training range too
                for v in rec.iter_mut() {
                    if let Value::Number(x) = v {
                        *x += 1000.0;
                    }
                }
                records[r] = rec;
            }
            let mutated = ds.with_records(records).map_err(|e| e.to_string())?;
            let a = fold_state(&ds, &cell, fold, &cfg, seed).map_err(|e| e.to_string())?;
            let b = fold_state(&mutated, &cell, fold, &cfg, seed).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{} fold {fold}: fitted state changed", cell.variant));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (variant, fold) states byte-identical"))
}

const SMALL_CONFIG: &str = r#"
[eval.mixup]
pairs = 40
copies_per_pair = 2
alpha = 0.2
beta = 0.2
mode = "uniform"

[params.mlp]
hidden = [8]
epochs = 3
learning_rate = 0.01

[params.random_forest]
n_trees = 6

[params.extra_trees]
n_trees = 6

[params.gaussian_process]
cap = 60

[params.rbf_svm]
cap = 60

[params.proposed]
encoder = [16, 4]
head = [4]
"autoencoder_training.epochs" = 3
"autoencoder_training.learning_rate" = 0.01
"head_training.epochs" = 3
"head_training.learning_rate" = 0.01
"mixup.pairs" = 40
"mixup.copies_per_pair" = 2
"#;

fn worker_determinism() -> Check {
    let bin = bsng_binary()?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let ds = synthetic_dataset(&bsng_schema(), 120, 24, 606).map_err(|e| e.to_string())?;
    let csv = dir.path().join("data.csv");
    ds.write_csv(std::fs::File::create(&csv).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("small.toml"), SMALL_CONFIG).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let out = dir.path().join(format!("w{workers}"));
        let status = Command::new(&bin)
            .args(["benchmark", "--seed", "7", "--config"])
            .arg(dir.path().join("small.toml"))
            .arg("--dataset")
            .arg(&csv)
            .args(["--workers", workers, "--out"])
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("benchmark --workers {workers}: {}", String::from_utf8_lossy(&status.stderr).trim()));
        }
        outputs.push(std::fs::read(out.join("benchmark.json")).map_err(|e| e.to_string())?);
    }
    let cells = serde_json::from_slice::<serde_json::Value>(&outputs[0]).map_err(|e| e.to_string())?["cells"]
        .as_array()
        .map_or(0, Vec::len);
    if outputs[0] != outputs[1] {
        return Err("reports differ between --workers 1 and --workers 8".into());
    }
    Ok(format!("{cells}-cell reports byte-identical"))
}

fn property_suites() -> Check {
    let suites: [(&str, fn() -> Check); 6] = [
        ("metric oracle", metric_oracle),
        ("gradient checks", gradient_checks),
        ("mixup invariants", mixup_invariants),
        ("pca oracle", pca_oracle),
        ("leakage guard", leakage_guard),
        ("worker determinism", worker_determinism),
    ];
    let mut failed = Vec::new();
    for (name, suite) in suites {
        match suite() {
            Ok(d) => println!("       ok    {name}: {d}"),
            Err(e) => {
                println!("       FAIL  {name}: {e}");
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        Ok("all six suites".into())
    } else {
        Err(format!("failed: {}", failed.join(", ")))
    }
}

fn sanity_anchor() -> Check {
    let (ds, source) = match published_csv() {
        Some(_) => (require_published()?.1, "published CSV".to_string()),
        None => {
            // a file with the published class counts, read back through the loader
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let path = dir.path().join("counts.csv");
            let ds = synthetic_dataset(&bsng_schema(), PUBLISHED_ROWS, PUBLISHED_POSITIVES, 7).map_err(|e| e.to_string())?;
            ds.write_csv(std::fs::File::create(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            (load_csv(&path, &bsng_schema()).map_err(|e| e.to_string())?, "synthetic file with the published counts".to_string())
        }
    };
    let acc = all_negative_baseline(&ds).map_err(|e| e.to_string())?;
    let expect = (ds.len() - ds.positives()) as f64 / ds.len() as f64;
    let identity = 1.0 - ds.positives() as f64 / ds.len() as f64;
    if acc != expect || (acc - identity).abs() > 1e-15 {
        return Err(format!("all-negative accuracy {acc} vs 1 - prevalence {identity}"));
    }
    if ds.len() == PUBLISHED_ROWS && ds.positives() == PUBLISHED_POSITIVES && format!("{:.2}", 100.0 * acc) != "92.16" {
        return Err(format!("{:.4}% with the published counts", 100.0 * acc));
    }
    let report = BenchmarkReport::new(&ds, &EvalConfig::default(), &[1], Vec::new()).map_err(|e| e.to_string())?;
    if report.all_negative.quoted != 87.5 || !report.notes.iter().any(|n| n.contains("87.5")) {
        return Err("report does not cite the quoted 87.5%".into());
    }
    Ok(format!("{:.2}% on the {source}; report cites the quoted 87.5%", 100.0 * acc))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("dataset integrity", dataset_integrity),
        ("encoding width", encoding_width),
        ("augmentation count", augmentation_count),
        ("proposed-method band", proposed_band),
        ("baseline bands", baseline_bands),
        ("property suites", property_suites),
        ("sanity anchor", sanity_anchor),
    ];
    if cfg!(debug_assertions) && published_csv().is_some() {
        println!("note: debug build; runtime limits assume --release");
    }
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {} {name}: {detail} ({secs:.1} s)", i + 1),
            Err(reason) => {
                failures += 1;
                println!("[FAIL] {} {name}: {reason} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
