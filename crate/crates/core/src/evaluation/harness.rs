use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{compute_metrics, metrics_from_predictions, FoldMetrics, MetricSummary};
use crate::augment::{augment_training, MixupConfig};
use crate::baselines::{self, apply_overrides, Family, ModelInfo, ModelSpec};
use crate::dataset::{stratified_kfold, Dataset, FoldPlan};
use crate::encoding::{fit_encoding, EncodingMode};
use crate::error::{param_err, Error, Result};
use crate::numerics::{Matrix, PcaModel, RngState};
use crate::pipeline::{fit_proposed, ProposedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Onehot,
    Augmented,
    Proposed,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Original, Variant::Onehot, Variant::Augmented, Variant::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Onehot => "onehot",
            Variant::Augmented => "augmented",
            Variant::Proposed => "proposed",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Onehot => "one-hot encoded",
            Variant::Augmented => "encoded & augmented",
            Variant::Proposed => "proposed",
        }
    }

    pub fn encoding_mode(self) -> EncodingMode {
        match self {
            Variant::Original => EncodingMode::Label,
            _ => EncodingMode::Onehot,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Variant> {
        let key = s.trim().to_ascii_lowercase().replace('-', "");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}' (original, onehot, augmented, proposed)")))
    }
}

/// What a benchmark cell trains.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Baseline(ModelSpec),
    Proposed(ProposedConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Baseline(s) => s.family().name(),
            Method::Proposed(_) => "proposed",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Baseline(s) => s.family().label(),
            Method::Proposed(_) => "Proposed",
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        match self {
            Method::Baseline(s) => s.params_json(),
            Method::Proposed(c) => serde_json::to_value(c).expect("config serializes"),
        }
    }

    pub fn with_overrides(&self, overrides: &BTreeMap<String, serde_json::Value>) -> Result<Method> {
        Ok(match self {
            Method::Baseline(s) => Method::Baseline(s.with_overrides(overrides)?),
            Method::Proposed(c) => Method::Proposed(apply_overrides(c, overrides)?),
        })
    }

    pub fn cap(&self) -> Option<usize> {
        match self {
            Method::Baseline(s) => s.cap(),
            Method::Proposed(_) => None,
        }
    }
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub variant: Variant,
    pub method: Method,
}

impl Cell {
    /// The proposed method only runs as the proposed variant and vice versa.
    pub fn new(variant: Variant, method: Method) -> Result<Cell> {
        if (variant == Variant::Proposed) != matches!(method, Method::Proposed(_)) {
            return Err(Error::Config(format!("method '{}' cannot run as variant '{variant}'", method.name())));
        }
        Ok(Cell { variant, method })
    }
}

/// The results table layout: ten families per baseline variant, RBF SVM in the
/// augmented block only, then the proposed method.
pub fn default_cells() -> Vec<Cell> {
    let mut cells = Vec::new();
    for variant in [Variant::Original, Variant::Onehot, Variant::Augmented] {
        for family in Family::ALL {
            if family == Family::RbfSvm && variant != Variant::Augmented {
                continue;
            }
            cells.push(Cell { variant, method: Method::Baseline(ModelSpec::defaults(family)) });
        }
    }
    cells.push(Cell { variant: Variant::Proposed, method: Method::Proposed(ProposedConfig::default()) });
    cells
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    /// MixUp settings of the augmented variant.
    pub mixup: MixupConfig,
    /// PCA components fed to the SVMs.
    pub pca_components: usize,
    /// Overrides the row cap of the kernel families.
    pub cap: Option<usize>,
    #[serde(skip)]
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { folds: 5, mixup: MixupConfig::default(), pca_components: 5, cap: None, workers: 1 }
    }
}

/// Training and validation matrices of one fold for a baseline variant.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub train_x: Matrix,
    pub train_y: Vec<f64>,
    pub val_x: Matrix,
    pub val_y: Vec<bool>,
    /// PCA projections of `train_x` and `val_x`, fitted on the clean training rows.
    pub projected: Option<(Matrix, Matrix)>,
    /// Canonical bytes of everything fitted on the training rows.
    pub state: Vec<u8>,
}

/// Encodes, optionally projects and (for the augmented variant) augments one
/// fold. Nothing is fitted on `val` rows and they are never augmented.
pub fn prepare_fold(
    ds: &Dataset,
    variant: Variant,
    train: &[usize],
    val: &[usize],
    cfg: &EvalConfig,
    mixup_rng: &RngState,
    with_pca: bool,
) -> Result<FoldData> {
    if variant == Variant::Proposed {
        return param_err("the proposed variant prepares its own features");
    }
    let mode = variant.encoding_mode();
    let plan = fit_encoding(ds, train).map_err(|e| e.at_stage("encode"))?;
    let pick = |rows: &[usize]| rows.iter().map(|&r| ds.records()[r].clone()).collect::<Vec<_>>();
    let clean_x = plan.transform_records(&pick(train), mode).map_err(|e| e.at_stage("encode"))?.matrix;
    let val_x = plan.transform_records(&pick(val), mode).map_err(|e| e.at_stage("encode"))?.matrix;
    let clean_y: Vec<f64> = train.iter().map(|&r| ds.labels()[r] as u8 as f64).collect();
    let val_y: Vec<bool> = val.iter().map(|&r| ds.labels()[r]).collect();
    let mut state = plan.state_bytes();

    let pca = if with_pca {
        let p = PcaModel::fit(&clean_x, cfg.pca_components).map_err(|e| e.at_stage("pca"))?;
        state.extend(serde_json::to_vec(&p).expect("pca serializes"));
        Some(p)
    } else {
        None
    };

    let (train_x, train_y) = if variant == Variant::Augmented {
        let (x, y) = augment_training(&clean_x, &clean_y, &cfg.mixup, mixup_rng).map_err(|e| e.at_stage("mixup"))?;
        let mut h = Sha256::new();
        for v in x.as_slice().iter().chain(&y) {
            h.update(v.to_le_bytes());
        }
        state.extend(h.finalize());
        (x, y)
    } else {
        (clean_x, clean_y)
    };

    let projected = match &pca {
        Some(p) => Some((p.transform(&train_x)?, p.transform(&val_x)?)),
        None => None,
    };
    Ok(FoldData { train_x, train_y, val_x, val_y, projected, state })
}

fn mixup_stream(master: &RngState, variant: Variant, fold: usize) -> RngState {
    master.fork_named(&format!("mixup/{variant}")).fork(fold as u64)
}

fn cell_stream(master: &RngState, cell: &Cell, fold: usize) -> RngState {
    master.fork_named(&format!("{}/{}", cell.variant, cell.method.name())).fork(fold as u64)
}

fn fold_plan(ds: &Dataset, k: usize, master: &RngState) -> Result<FoldPlan> {
    let pos = ds.positives();
    if pos < k || ds.len() - pos < k {
        return param_err(format!(
            "{k}-fold cross-validation needs at least {k} samples per class, got {pos} positive and {} negative",
            ds.len() - pos
        ));
    }
    stratified_kfold(ds.labels(), k, &mut master.fork_named("folds"))
}

/// Bytes of every model-independent fitted state of one fold: encoding plan,
/// PCA, augmented training set or, for the proposed variant, the whole artifact.
pub fn fold_state(ds: &Dataset, cell: &Cell, fold: usize, cfg: &EvalConfig, seed: u64) -> Result<Vec<u8>> {
    let master = RngState::new(seed);
    let plan = fold_plan(ds, cfg.folds, &master)?;
    let (train, val) = (plan.train_indices(fold), plan.validation_indices(fold));
    match &cell.method {
        Method::Proposed(pc) => {
            let pc = ProposedConfig { seed: cell_stream(&master, cell, fold).next_u64(), ..pc.clone() };
            Ok(fit_proposed(ds, &train, &pc)?.state_bytes())
        }
        Method::Baseline(_) => {
            let rng = mixup_stream(&master, cell.variant, fold);
            Ok(prepare_fold(ds, cell.variant, &train, &val, cfg, &rng, true)?.state)
        }
    }
}

/// Runs `f(0..n)` on at most `workers` threads; results come back in job order.
fn run_pool<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                slots.lock().expect("no worker panicked")[i] = Some(out);
            });
        }
    });
    slots.into_inner().expect("no worker panicked").into_iter().map(|o| o.expect("every job ran")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub fold_info: Vec<ModelInfo>,
}

/// Cross-validated metrics of one cell over one or more master seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub variant: Variant,
    pub family: String,
    pub label: String,
    pub seeds: Vec<u64>,
    pub cap: Option<usize>,
    pub params: serde_json::Value,
    pub runs: Vec<SeedRun>,
    /// Mean and population std over every fold of every seed.
    pub summary: Option<MetricSummary>,
    pub error: Option<String>,
}

impl CellResult {
    pub fn mean_f1(&self) -> Option<f64> {
        self.summary.map(|s| s.f1.mean)
    }

    pub fn mean_auc(&self) -> Option<f64> {
        self.summary.map(|s| s.auc.mean)
    }

    /// Validation rows scored across the folds of the first seed.
    pub fn validation_rows(&self) -> usize {
        self.runs.first().map_or(0, |r| r.folds.iter().map(|f| f.confusion.total()).sum())
    }
}

type FoldOutcome = (FoldMetrics, ModelInfo);

fn score_baseline(spec: &ModelSpec, data: &FoldData, rng: &RngState) -> Result<FoldOutcome> {
    let family = spec.family();
    let (tx, vx) = match (&data.projected, family.uses_pca()) {
        (Some((t, v)), true) => (t, v),
        (None, true) => return param_err("fold was prepared without PCA"),
        _ => (&data.train_x, &data.val_x),
    };
    let model = baselines::fit(spec, tx, &data.train_y, rng)?;
    let scores = model.scores(vx)?;
    let predicted = model.predict(vx)?;
    Ok((metrics_from_predictions(&data.val_y, &predicted, &scores)?, model.info()))
}

fn score_proposed(pc: &ProposedConfig, ds: &Dataset, train: &[usize], val: &[usize], mut rng: RngState) -> Result<FoldOutcome> {
    let pc = ProposedConfig { seed: rng.next_u64(), ..pc.clone() };
    let artifact = fit_proposed(ds, train, &pc)?;
    let records: Vec<_> = val.iter().map(|&r| ds.records()[r].clone()).collect();
    let x = artifact.plan.transform_records(&records, EncodingMode::Onehot)?.matrix;
    let scores = artifact.score_encoded(&x)?;
    let truth: Vec<bool> = val.iter().map(|&r| ds.labels()[r]).collect();
    Ok((compute_metrics(&truth, &scores, 0.5)?, ModelInfo::default()))
}

fn apply_cap(cells: &[Cell], cap: Option<usize>) -> Vec<Cell> {
    cells
        .iter()
        .map(|c| {
            let mut c = c.clone();
            if let (Some(cap), Method::Baseline(spec)) = (cap, &mut c.method) {
                spec.set_cap(cap);
            }
            c
        })
        .collect()
}

/// Cross-validates every cell under every seed. Each entry holds the cell's
/// runs, or the first error in (seed, fold) order annotated with its fold.
fn evaluate_cells(ds: &Dataset, cells: &[Cell], seeds: &[u64], cfg: &EvalConfig) -> Vec<Result<Vec<SeedRun>>> {
    let k = cfg.folds;
    let mut outcomes: Vec<Vec<Vec<Option<Result<FoldOutcome>>>>> =
        cells.iter().map(|_| seeds.iter().map(|_| (0..k).map(|_| None).collect()).collect()).collect();

    for (si, &seed) in seeds.iter().enumerate() {
        let master = RngState::new(seed);
        let plan = match fold_plan(ds, k, &master) {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                for per_cell in outcomes.iter_mut() {
                    per_cell[si][0] = Some(Err(Error::Config(msg.clone())));
                }
                continue;
            }
        };
        let splits: Vec<(Vec<usize>, Vec<usize>)> =
            (0..k).map(|f| (plan.train_indices(f), plan.validation_indices(f))).collect();

        let mut variants: Vec<Variant> = cells.iter().map(|c| c.variant).collect();
        variants.sort();
        variants.dedup();
        for variant in variants {
            let members: Vec<usize> = (0..cells.len()).filter(|&i| cells[i].variant == variant).collect();
            let prepared: Vec<Option<Result<FoldData>>> = if variant == Variant::Proposed {
                (0..k).map(|_| None).collect()
            } else {
                let with_pca = members.iter().any(|&i| match &cells[i].method {
                    Method::Baseline(s) => s.family().uses_pca(),
                    Method::Proposed(_) => false,
                });
                run_pool(k, cfg.workers, |f| {
                    let rng = mixup_stream(&master, variant, f);
                    Some(prepare_fold(ds, variant, &splits[f].0, &splits[f].1, cfg, &rng, with_pca))
                })
            };

            let jobs: Vec<(usize, usize)> = members.iter().flat_map(|&c| (0..k).map(move |f| (c, f))).collect();
            let results = run_pool(jobs.len(), cfg.workers, |j| {
                let (c, f) = jobs[j];
                let cell = &cells[c];
                let rng = cell_stream(&master, cell, f);
                match (&cell.method, &prepared[f]) {
                    (Method::Proposed(pc), _) => score_proposed(pc, ds, &splits[f].0, &splits[f].1, rng),
                    (Method::Baseline(spec), Some(Ok(data))) => score_baseline(spec, data, &rng),
                    (Method::Baseline(_), Some(Err(e))) => Err(Error::Config(e.to_string())),
                    (Method::Baseline(_), None) => unreachable!("baseline folds are always prepared"),
                }
            });
            for ((c, f), r) in jobs.into_iter().zip(results) {
                outcomes[c][si][f] = Some(r.map_err(|e| e.at_fold(f)));
            }
        }
    }

    outcomes
        .into_iter()
        .map(|per_seed| {
            let mut runs = Vec::with_capacity(seeds.len());
            for (si, folds) in per_seed.into_iter().enumerate() {
                let mut run = SeedRun { seed: seeds[si], folds: Vec::new(), fold_info: Vec::new() };
                for o in folds {
                    let (m, info) = o.expect("every fold was scheduled")?;
                    run.folds.push(m);
                    run.fold_info.push(info);
                }
                runs.push(run);
            }
            Ok(runs)
        })
        .collect()
}

fn to_result(cell: &Cell, seeds: &[u64], outcome: Result<Vec<SeedRun>>) -> CellResult {
    let mut r = CellResult {
        variant: cell.variant,
        family: cell.method.name().to_string(),
        label: cell.method.label().to_string(),
        seeds: seeds.to_vec(),
        cap: cell.method.cap(),
        params: cell.method.params_json(),
        runs: Vec::new(),
        summary: None,
        error: None,
    };
    match outcome {
        Ok(runs) => {
            let all: Vec<FoldMetrics> = runs.iter().flat_map(|r| r.folds.iter().copied()).collect();
            r.summary = Some(MetricSummary::of(&all));
            r.runs = runs;
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

/// k-fold cross-validation of one method on one variant.
pub fn cross_validate(method: &Method, variant: Variant, ds: &Dataset, cfg: &EvalConfig, seed: u64) -> Result<CellResult> {
    let cells = apply_cap(&[Cell::new(variant, method.clone())?], cfg.cap);
    let outcome = evaluate_cells(ds, &cells, &[seed], cfg).pop().expect("one cell");
    let runs = outcome?;
    Ok(to_result(&cells[0], &[seed], Ok(runs)))
}

/// Cross-validates every cell under every seed; failures stay in their cell.
pub fn benchmark(ds: &Dataset, cells: &[Cell], seeds: &[u64], cfg: &EvalConfig) -> Result<Vec<CellResult>> {
    if seeds.is_empty() {
        return Err(Error::Config("benchmark needs at least one seed".into()));
    }
    let cells = apply_cap(cells, cfg.cap);
    let outcomes = evaluate_cells(ds, &cells, seeds, cfg);
    Ok(cells.iter().zip(outcomes).map(|(c, o)| to_result(c, seeds, o)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub result: CellResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub points: Vec<GridPoint>,
    /// Index into `points` of the selection.
    pub best: usize,
}

impl GridResult {
    pub fn selection(&self) -> &GridPoint {
        &self.points[self.best]
    }
}

/// Cartesian product of per-key value lists, in key order with the last key
/// varying fastest.
pub fn expand_grid(axes: &BTreeMap<String, Vec<serde_json::Value>>) -> Vec<BTreeMap<String, serde_json::Value>> {
    let mut points = vec![BTreeMap::new()];
    for (key, values) in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), v.clone());
                    q
                })
            })
            .collect();
    }
    points
}

/// Evaluates every grid point and picks the highest mean F1, then the higher
/// mean AUC, then the earlier point. Points that fail are kept but never chosen.
pub fn grid_search(
    method: &Method,
    grid: &[BTreeMap<String, serde_json::Value>],
    variant: Variant,
    ds: &Dataset,
    cfg: &EvalConfig,
    seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let cells = grid
        .iter()
        .map(|o| Cell::new(variant, method.with_overrides(o)?))
        .collect::<Result<Vec<_>>>()?;
    let results = benchmark(ds, &cells, &[seed], cfg)?;
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        let Some(s) = r.summary else { continue };
        let better = match best.and_then(|b| results[b].summary) {
            None => true,
            Some(b) => s.f1.mean > b.f1.mean || (s.f1.mean == b.f1.mean && s.auc.mean > b.auc.mean),
        };
        if better {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        let msg = results[0].error.clone().unwrap_or_default();
        return Err(Error::Config(format!("every grid point failed; first: {msg}")));
    };
    let points = grid.iter().cloned().zip(results).map(|(overrides, result)| GridPoint { overrides, result }).collect();
    Ok(GridResult { points, best })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::tests::toy_schema;
    use crate::dataset::Value;

    /// Toy rows whose label follows Daylight, with a little noise in Month.
    pub(crate) fn toy(n: usize, seed: u64) -> Dataset {
        let mut rng = RngState::new(seed);
        let mut records = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let pos = i % 4 == 0;
            let day = if rng.uniform() < 0.9 { pos } else { !pos };
            records.push(vec![
                Value::Category(rng.below(3) as u32),
                Value::Number((rng.below(24)) as f64),
                Value::Category(day as u32),
            ]);
            labels.push(pos);
        }
        Dataset::from_records(toy_schema(), records, labels).unwrap()
    }

    fn small_cfg() -> EvalConfig {
        EvalConfig {
            mixup: MixupConfig { pairs: 20, copies_per_pair: 3, ..MixupConfig::default() },
            pca_components: 2,
            ..EvalConfig::default()
        }
    }

    fn tiny_proposed() -> ProposedConfig {
        let t = crate::pipeline::StageTraining { learning_rate: 1e-2, epochs: 5, batch_size: 16 };
        ProposedConfig {
            encoder: vec![6, 3],
            head: vec![4],
            autoencoder_training: t,
            head_training: t,
            mixup: MixupConfig { pairs: 20, copies_per_pair: 2, ..MixupConfig::default() },
            seed: 0,
        }
    }

    #[test]
    fn default_layout_has_32_rows() {
        let cells = default_cells();
        assert_eq!(cells.len(), 32);
        let rbf: Vec<_> = cells.iter().filter(|c| c.method.name() == "rbf_svm").collect();
        assert_eq!(rbf.len(), 1);
        assert_eq!(rbf[0].variant, Variant::Augmented);
        assert_eq!(cells.last().unwrap().variant, Variant::Proposed);
    }

    #[test]
    fn cell_pairing_is_checked() {
        assert!(Cell::new(Variant::Onehot, Method::Proposed(ProposedConfig::default())).is_err());
        assert!(Cell::new(Variant::Proposed, Method::Baseline(ModelSpec::defaults(Family::Knn))).is_err());
        assert_eq!("One-Hot".parse::<Variant>().unwrap(), Variant::Onehot);
    }

    #[test]
    fn folds_partition_the_rows() {
        let ds = toy(60, 1);
        for v in [Variant::Original, Variant::Onehot, Variant::Augmented] {
            let r = cross_validate(&Method::Baseline(ModelSpec::defaults(Family::NaiveBayes)), v, &ds, &small_cfg(), 3)
                .unwrap();
            assert_eq!(r.validation_rows(), 60);
            assert_eq!(r.runs[0].folds.len(), 5);
        }
    }

    #[test]
    fn augmented_training_size() {
        let ds = toy(60, 2);
        let cfg = small_cfg();
        let master = RngState::new(4);
        let plan = fold_plan(&ds, 5, &master).unwrap();
        let (tr, va) = (plan.train_indices(0), plan.validation_indices(0));
        let d = prepare_fold(&ds, Variant::Augmented, &tr, &va, &cfg, &master, true).unwrap();
        assert_eq!(d.train_x.rows(), tr.len() + 60);
        assert_eq!(d.val_x.rows(), va.len());
        assert_eq!(d.projected.as_ref().unwrap().0.cols(), 2);
    }

    #[test]
    fn fold_errors_name_the_fold() {
        let ds = toy(60, 3);
        let spec = ModelSpec::defaults(Family::Knn)
            .with_overrides(&BTreeMap::from([("k".to_string(), serde_json::json!(0))]))
            .unwrap();
        let err = cross_validate(&Method::Baseline(spec), Variant::Onehot, &ds, &small_cfg(), 1).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 0, .. }), "{err}");
    }

    #[test]
    fn too_few_positives_for_k() {
        let ds = toy(12, 3);
        let err = cross_validate(&Method::Baseline(ModelSpec::defaults(Family::Knn)), Variant::Onehot, &ds, &small_cfg(), 1);
        assert!(err.is_err());
    }

    #[test]
    fn workers_do_not_change_results() {
        let ds = toy(60, 5);
        let cells: Vec<Cell> = default_cells()
            .into_iter()
            .filter(|c| matches!(c.method.name(), "decision_tree" | "linear_svm" | "naive_bayes"))
            .chain([Cell { variant: Variant::Proposed, method: Method::Proposed(tiny_proposed()) }])
            .collect();
        let one = benchmark(&ds, &cells, &[9], &EvalConfig { workers: 1, ..small_cfg() }).unwrap();
        let many = benchmark(&ds, &cells, &[9], &EvalConfig { workers: 8, ..small_cfg() }).unwrap();
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
        assert!(one.iter().all(|c| c.error.is_none()), "{one:#?}");
    }

    #[test]
    fn failing_cell_does_not_stop_the_run() {
        let ds = toy(60, 6);
        let bad = ModelSpec::defaults(Family::Knn)
            .with_overrides(&BTreeMap::from([("k".to_string(), serde_json::json!(0))]))
            .unwrap();
        let cells = vec![
            Cell { variant: Variant::Onehot, method: Method::Baseline(bad) },
            Cell { variant: Variant::Onehot, method: Method::Baseline(ModelSpec::defaults(Family::DecisionTree)) },
        ];
        let r = benchmark(&ds, &cells, &[1], &small_cfg()).unwrap();
        assert!(r[0].error.as_deref().unwrap().starts_with("fold 0"));
        assert!(r[1].summary.is_some());
    }

    #[test]
    fn cap_override_reaches_kernel_cells() {
        let ds = toy(60, 7);
        let cfg = EvalConfig { cap: Some(20), ..small_cfg() };
        let r = cross_validate(&Method::Baseline(ModelSpec::defaults(Family::GaussianProcess)), Variant::Onehot, &ds, &cfg, 2)
            .unwrap();
        assert_eq!(r.cap, Some(20));
        assert!(r.runs[0].fold_info.iter().all(|i| i.subsample.as_ref().unwrap().used == 20));
    }

    #[test]
    fn grid_expansion_order() {
        let axes = BTreeMap::from([
            ("a".to_string(), vec![serde_json::json!(1), serde_json::json!(2)]),
            ("b".to_string(), vec![serde_json::json!("x"), serde_json::json!("y")]),
        ]);
        let g = expand_grid(&axes);
        assert_eq!(g.len(), 4);
        assert_eq!(g[1]["a"], 1);
        assert_eq!(g[1]["b"], "y");
    }

    #[test]
    fn singleton_grid_returns_its_point() {
        let ds = toy(60, 8);
        let m = Method::Baseline(ModelSpec::defaults(Family::DecisionTree));
        let grid = vec![BTreeMap::new()];
        let g = grid_search(&m, &grid, Variant::Onehot, &ds, &small_cfg(), 5).unwrap();
        assert_eq!(g.best, 0);
        let cv = cross_validate(&m, Variant::Onehot, &ds, &small_cfg(), 5).unwrap();
        assert_eq!(g.selection().result, cv);
        assert!(grid_search(&m, &[], Variant::Onehot, &ds, &small_cfg(), 5).is_err());
    }

    #[test]
    fn unknown_grid_key_is_a_config_error() {
        let ds = toy(60, 8);
        let m = Method::Baseline(ModelSpec::defaults(Family::Knn));
        let grid = vec![BTreeMap::from([("neighbours".to_string(), serde_json::json!(3))])];
        assert!(matches!(grid_search(&m, &grid, Variant::Onehot, &ds, &small_cfg(), 5), Err(Error::Config(_))));
    }

    #[test]
    fn bad_learning_rate_is_never_selected() {
        let ds = toy(80, 9);
        let m = Method::Baseline(ModelSpec::Mlp(baselines::MlpParams {
            hidden: vec![8],
            learning_rate: 1e-2,
            epochs: 30,
            batch_size: 16,
        }));
        let grid = vec![
            BTreeMap::from([("learning_rate".to_string(), serde_json::json!(10.0))]),
            BTreeMap::from([("learning_rate".to_string(), serde_json::json!(1e-2))]),
        ];
        let g = grid_search(&m, &grid, Variant::Onehot, &ds, &small_cfg(), 3).unwrap();
        assert_eq!(g.best, 1, "{:?}", g.points.iter().map(|p| p.result.mean_f1()).collect::<Vec<_>>());
        let again = grid_search(&m, &grid, Variant::Onehot, &ds, &small_cfg(), 3).unwrap();
        assert_eq!(g, again);
    }

    #[test]
    fn fold_metrics_ignore_row_order() {
        let ds = toy(60, 12);
        let cfg = small_cfg();
        let master = RngState::new(2);
        let plan = fold_plan(&ds, 5, &master).unwrap();
        let spec = ModelSpec::defaults(Family::NaiveBayes);
        for fold in 0..5 {
            let (mut tr, mut va) = (plan.train_indices(fold), plan.validation_indices(fold));
            let a = prepare_fold(&ds, Variant::Onehot, &tr, &va, &cfg, &master, false).unwrap();
            let (ma, _) = score_baseline(&spec, &a, &master).unwrap();
            tr.reverse();
            va.reverse();
            let b = prepare_fold(&ds, Variant::Onehot, &tr, &va, &cfg, &master, false).unwrap();
            let (mb, _) = score_baseline(&spec, &b, &master).unwrap();
            assert_eq!(ma.confusion, mb.confusion);
            for (x, y) in ma.values().iter().zip(mb.values()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn validation_rows_do_not_leak_into_fitted_state() {
        let ds = toy(60, 10);
        let cfg = small_cfg();
        let master = RngState::new(11);
        let plan = fold_plan(&ds, 5, &master).unwrap();
        let cells = [
            Cell { variant: Variant::Original, method: Method::Baseline(ModelSpec::defaults(Family::LinearSvm)) },
            Cell { variant: Variant::Onehot, method: Method::Baseline(ModelSpec::defaults(Family::LinearSvm)) },
            Cell { variant: Variant::Augmented, method: Method::Baseline(ModelSpec::defaults(Family::LinearSvm)) },
            Cell { variant: Variant::Proposed, method: Method::Proposed(tiny_proposed()) },
        ];
        for fold in 0..5 {
            let mut records = ds.records().to_vec();
            for r in plan.validation_indices(fold) {
                records[r] = vec![Value::Category(2), Value::Number(1000.0), Value::Category(1)];
            }
            let mutated = ds.with_records(records).unwrap();
            for cell in &cells {
                let a = fold_state(&ds, cell, fold, &cfg, 11).unwrap();
                let b = fold_state(&mutated, cell, fold, &cfg, 11).unwrap();
                assert!(a == b, "fold {fold} {} state changed", cell.variant);
            }
        }
    }
}
