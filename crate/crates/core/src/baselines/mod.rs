//! The comparison model zoo.
//!
//! Every family fits on a real feature matrix and soft labels in [0, 1] and
//! produces one finite score per row, larger meaning more black-spot-like.
//! Hard labels are `score ≥ threshold`, with the threshold at 0.5 for
//! probability-like scores and 0 for signed margins. The one exception is an
//! AdaBoost model that kept no stump, which labels everything with the
//! training majority.

mod bayes;
mod boost;
mod kernel_models;
mod linear;
mod neighbors;
mod trees;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use bayes::{fit_gaussian_nb, GaussianNbModel, NaiveBayesParams};
pub use boost::{fit_adaboost, reweight, AdaBoostModel, AdaBoostParams, Stump};
pub use kernel_models::{
    fit_gp_surrogate, fit_rbf_svm, stratified_subsample, GpParams, GpSurrogateModel, RbfSvmModel,
    RbfSvmParams, Subsample,
};
pub use linear::{
    fit_linear_svm, fit_poisson_regression, poisson_pmf, LinearSvmModel, LinearSvmParams,
    PoissonModel, PoissonParams,
};
pub use neighbors::{fit_knn, knn_classify, KnnModel, KnnParams};
pub use trees::{
    fit_decision_tree, fit_extra_trees, fit_random_forest, gini_impurity, grow_tree, FeatureBag,
    Forest, ForestParams, Splitter, Tree, TreeNode, TreeParams,
};

use crate::augment::harden_labels;
use crate::container::{self, PayloadTag, Reader, Writer};
use crate::error::{param_err, shape_err, ArtifactError, Error, Result};
use crate::neural::{train_mlp, LayerSpec, MlpClassifier, TrainConfig};
use crate::numerics::{Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    NaiveBayes,
    GaussianProcess,
    Knn,
    LinearSvm,
    RbfSvm,
    DecisionTree,
    RandomForest,
    ExtraTrees,
    AdaBoost,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Poisson,
        Family::NaiveBayes,
        Family::GaussianProcess,
        Family::Knn,
        Family::LinearSvm,
        Family::RbfSvm,
        Family::DecisionTree,
        Family::RandomForest,
        Family::ExtraTrees,
        Family::AdaBoost,
        Family::Mlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::NaiveBayes => "naive_bayes",
            Family::GaussianProcess => "gaussian_process",
            Family::Knn => "knn",
            Family::LinearSvm => "linear_svm",
            Family::RbfSvm => "rbf_svm",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::ExtraTrees => "extra_trees",
            Family::AdaBoost => "adaboost",
            Family::Mlp => "mlp",
        }
    }

    /// Row label used in result tables.
    pub fn label(self) -> &'static str {
        match self {
            Family::Poisson => "Poisson",
            Family::NaiveBayes => "Naive Bayes",
            Family::GaussianProcess => "Gaussian Process",
            Family::Knn => "k-NN",
            Family::LinearSvm => "Linear SVM",
            Family::RbfSvm => "RBF SVM",
            Family::DecisionTree => "Decision Tree",
            Family::RandomForest => "Random Forest",
            Family::ExtraTrees => "Extra Trees",
            Family::AdaBoost => "AdaBoost",
            Family::Mlp => "MLP",
        }
    }

    /// SVMs see the five-component PCA projection of their variant's matrix.
    pub fn uses_pca(self) -> bool {
        matches!(self, Family::LinearSvm | Family::RbfSvm)
    }

    /// Only the neural classifier consumes MixUp's soft labels directly.
    pub fn soft_labels(self) -> bool {
        self == Family::Mlp
    }

    pub fn threshold(self) -> f64 {
        match self {
            Family::GaussianProcess | Family::LinearSvm | Family::RbfSvm | Family::AdaBoost => 0.0,
            _ => 0.5,
        }
    }

    pub fn payload_tag(self) -> PayloadTag {
        match self {
            Family::Poisson => PayloadTag::Poisson,
            Family::NaiveBayes => PayloadTag::NaiveBayes,
            Family::GaussianProcess => PayloadTag::GaussianProcess,
            Family::Knn => PayloadTag::Knn,
            Family::LinearSvm => PayloadTag::LinearSvm,
            Family::RbfSvm => PayloadTag::RbfSvm,
            Family::DecisionTree => PayloadTag::DecisionTree,
            Family::RandomForest => PayloadTag::RandomForest,
            Family::ExtraTrees => PayloadTag::ExtraTrees,
            Family::AdaBoost => PayloadTag::AdaBoost,
            Family::Mlp => PayloadTag::Mlp,
        }
    }

    fn from_tag(tag: PayloadTag) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.payload_tag() == tag)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Family> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Family::ALL
            .into_iter()
            .find(|f| f.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown model family '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self { hidden: vec![512, 7, 64, 32, 4], learning_rate: 1e-4, epochs: 100, batch_size: 32 }
    }
}

/// A family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum ModelSpec {
    Poisson(PoissonParams),
    NaiveBayes(NaiveBayesParams),
    GaussianProcess(GpParams),
    Knn(KnnParams),
    LinearSvm(LinearSvmParams),
    RbfSvm(RbfSvmParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
    ExtraTrees(ForestParams),
    AdaBoost(AdaBoostParams),
    Mlp(MlpParams),
}

/// Replaces named fields of a serializable struct. A dotted name such as
/// `head_training.epochs` reaches into nested structs; unknown names are errors.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(
    value: &T,
    overrides: &BTreeMap<String, serde_json::Value>,
) -> Result<T> {
    let mut v = serde_json::to_value(value).expect("parameters serialize");
    for (key, val) in overrides {
        let mut at = &mut v;
        for part in key.split('.') {
            let obj = at
                .as_object_mut()
                .ok_or_else(|| Error::Config(format!("'{key}' does not name a nested field")))?;
            if !obj.contains_key(part) {
                let known: Vec<&str> = obj.keys().map(String::as_str).collect();
                return Err(Error::Config(format!("unknown hyperparameter '{key}' (known: {})", known.join(", "))));
            }
            at = obj.get_mut(part).expect("checked above");
        }
        *at = val.clone();
    }
    serde_json::from_value(v).map_err(|e| Error::Config(format!("bad hyperparameter value: {e}")))
}

fn patch<T: Serialize + DeserializeOwned>(p: &T, overrides: &BTreeMap<String, serde_json::Value>) -> Result<T> {
    apply_overrides(p, overrides)
}

impl ModelSpec {
    /// Defaults taken from the benchmark setup.
    pub fn defaults(family: Family) -> ModelSpec {
        match family {
            Family::Poisson => ModelSpec::Poisson(Default::default()),
            Family::NaiveBayes => ModelSpec::NaiveBayes(Default::default()),
            Family::GaussianProcess => ModelSpec::GaussianProcess(Default::default()),
            Family::Knn => ModelSpec::Knn(Default::default()),
            Family::LinearSvm => ModelSpec::LinearSvm(Default::default()),
            Family::RbfSvm => ModelSpec::RbfSvm(Default::default()),
            Family::DecisionTree => ModelSpec::DecisionTree(Default::default()),
            Family::RandomForest => ModelSpec::RandomForest(ForestParams::random_forest()),
            Family::ExtraTrees => ModelSpec::ExtraTrees(ForestParams::extra_trees()),
            Family::AdaBoost => ModelSpec::AdaBoost(Default::default()),
            Family::Mlp => ModelSpec::Mlp(Default::default()),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Poisson(_) => Family::Poisson,
            ModelSpec::NaiveBayes(_) => Family::NaiveBayes,
            ModelSpec::GaussianProcess(_) => Family::GaussianProcess,
            ModelSpec::Knn(_) => Family::Knn,
            ModelSpec::LinearSvm(_) => Family::LinearSvm,
            ModelSpec::RbfSvm(_) => Family::RbfSvm,
            ModelSpec::DecisionTree(_) => Family::DecisionTree,
            ModelSpec::RandomForest(_) => Family::RandomForest,
            ModelSpec::ExtraTrees(_) => Family::ExtraTrees,
            ModelSpec::AdaBoost(_) => Family::AdaBoost,
            ModelSpec::Mlp(_) => Family::Mlp,
        }
    }

    /// Hyperparameters as a JSON object.
    pub fn params_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")["params"].clone()
    }

    /// Copy with named hyperparameters replaced; unknown names are errors.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, serde_json::Value>) -> Result<ModelSpec> {
        Ok(match self {
            ModelSpec::Poisson(p) => ModelSpec::Poisson(patch(p, overrides)?),
            ModelSpec::NaiveBayes(p) => ModelSpec::NaiveBayes(patch(p, overrides)?),
            ModelSpec::GaussianProcess(p) => ModelSpec::GaussianProcess(patch(p, overrides)?),
            ModelSpec::Knn(p) => ModelSpec::Knn(patch(p, overrides)?),
            ModelSpec::LinearSvm(p) => ModelSpec::LinearSvm(patch(p, overrides)?),
            ModelSpec::RbfSvm(p) => ModelSpec::RbfSvm(patch(p, overrides)?),
            ModelSpec::DecisionTree(p) => ModelSpec::DecisionTree(patch(p, overrides)?),
            ModelSpec::RandomForest(p) => ModelSpec::RandomForest(patch(p, overrides)?),
            ModelSpec::ExtraTrees(p) => ModelSpec::ExtraTrees(patch(p, overrides)?),
            ModelSpec::AdaBoost(p) => ModelSpec::AdaBoost(patch(p, overrides)?),
            ModelSpec::Mlp(p) => ModelSpec::Mlp(patch(p, overrides)?),
        })
    }

    /// Row cap for the kernel families, if any.
    pub fn cap(&self) -> Option<usize> {
        match self {
            ModelSpec::GaussianProcess(p) => Some(p.cap),
            ModelSpec::RbfSvm(p) => Some(p.cap),
            _ => None,
        }
    }

    pub fn set_cap(&mut self, cap: usize) {
        match self {
            ModelSpec::GaussianProcess(p) => p.cap = cap,
            ModelSpec::RbfSvm(p) => p.cap = cap,
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Poisson(PoissonModel),
    NaiveBayes(GaussianNbModel),
    GaussianProcess(GpSurrogateModel),
    Knn(KnnModel),
    LinearSvm(LinearSvmModel),
    RbfSvm(RbfSvmModel),
    DecisionTree(Tree),
    RandomForest(Forest),
    ExtraTrees(Forest),
    AdaBoost(AdaBoostModel),
    Mlp(MlpClassifier),
}

/// Fits `spec` on `x` with soft labels `y`; hard-label families see `y ≥ 0.5`.
pub fn fit(spec: &ModelSpec, x: &Matrix, y: &[f64], rng: &RngState) -> Result<TrainedModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if let Some(bad) = y.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return param_err(format!("labels must lie in [0, 1], found {bad}"));
    }
    let hard = harden_labels(y, 0.5);
    let hard_f: Vec<f64> = hard.iter().map(|&p| p as u8 as f64).collect();
    Ok(match spec {
        ModelSpec::Poisson(p) => TrainedModel::Poisson(fit_poisson_regression(x, &hard_f, p)?),
        ModelSpec::NaiveBayes(p) => TrainedModel::NaiveBayes(fit_gaussian_nb(x, &hard, p)?),
        ModelSpec::GaussianProcess(p) => TrainedModel::GaussianProcess(fit_gp_surrogate(x, &hard, p, rng)?),
        ModelSpec::Knn(p) => TrainedModel::Knn(fit_knn(x, &hard, p)?),
        ModelSpec::LinearSvm(p) => TrainedModel::LinearSvm(fit_linear_svm(x, &hard, p, rng)?),
        ModelSpec::RbfSvm(p) => TrainedModel::RbfSvm(fit_rbf_svm(x, &hard, p, rng)?),
        ModelSpec::DecisionTree(p) => TrainedModel::DecisionTree(fit_decision_tree(x, &hard, p, rng)?),
        ModelSpec::RandomForest(p) => TrainedModel::RandomForest(fit_random_forest(x, &hard, p, rng)?),
        ModelSpec::ExtraTrees(p) => TrainedModel::ExtraTrees(fit_extra_trees(x, &hard, p, rng)?),
        ModelSpec::AdaBoost(p) => TrainedModel::AdaBoost(fit_adaboost(x, &hard, p)?),
        ModelSpec::Mlp(p) => {
            let cfg = TrainConfig {
                learning_rate: p.learning_rate,
                epochs: p.epochs,
                batch_size: p.batch_size,
                seed: rng.fork_named("mlp").next_u64(),
            };
            TrainedModel::Mlp(train_mlp(&LayerSpec::relu_stack(&p.hidden), x, y, &cfg)?)
        }
    })
}

/// Metadata worth reporting next to a fitted model's metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub subsample: Option<Subsample>,
    pub converged: Option<bool>,
    pub oob_accuracy: Option<f64>,
    pub rounds: Option<usize>,
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::Poisson(_) => Family::Poisson,
            TrainedModel::NaiveBayes(_) => Family::NaiveBayes,
            TrainedModel::GaussianProcess(_) => Family::GaussianProcess,
            TrainedModel::Knn(_) => Family::Knn,
            TrainedModel::LinearSvm(_) => Family::LinearSvm,
            TrainedModel::RbfSvm(_) => Family::RbfSvm,
            TrainedModel::DecisionTree(_) => Family::DecisionTree,
            TrainedModel::RandomForest(_) => Family::RandomForest,
            TrainedModel::ExtraTrees(_) => Family::ExtraTrees,
            TrainedModel::AdaBoost(_) => Family::AdaBoost,
            TrainedModel::Mlp(_) => Family::Mlp,
        }
    }

    pub fn threshold(&self) -> f64 {
        self.family().threshold()
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        let s = match self {
            TrainedModel::Poisson(m) => m.scores(x)?,
            TrainedModel::NaiveBayes(m) => m.scores(x)?,
            TrainedModel::GaussianProcess(m) => m.scores(x)?,
            TrainedModel::Knn(m) => m.scores(x)?,
            TrainedModel::LinearSvm(m) => m.scores(x)?,
            TrainedModel::RbfSvm(m) => m.scores(x)?,
            TrainedModel::DecisionTree(t) => tree_scores(t, x)?,
            TrainedModel::RandomForest(f) | TrainedModel::ExtraTrees(f) => {
                check_width(x, f.trees.first().map(|t| tree_width(t)).unwrap_or(0))?;
                f.scores(x)
            }
            TrainedModel::AdaBoost(m) => m.scores(x)?,
            TrainedModel::Mlp(m) => m.scores(x)?,
        };
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} score for row {i} is {}", self.family(), s[i])));
        }
        Ok(s)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<bool>> {
        if let TrainedModel::AdaBoost(m) = self {
            return m.predict(x);
        }
        let t = self.threshold();
        Ok(self.scores(x)?.into_iter().map(|s| s >= t).collect())
    }

    pub fn info(&self) -> ModelInfo {
        match self {
            TrainedModel::GaussianProcess(m) => ModelInfo { subsample: Some(m.subsample.clone()), ..Default::default() },
            TrainedModel::RbfSvm(m) => {
                ModelInfo { subsample: Some(m.subsample.clone()), converged: Some(m.converged), ..Default::default() }
            }
            TrainedModel::Poisson(m) => ModelInfo { rounds: Some(m.iterations), converged: Some(true), ..Default::default() },
            TrainedModel::RandomForest(f) | TrainedModel::ExtraTrees(f) => {
                ModelInfo { oob_accuracy: f.oob_accuracy, ..Default::default() }
            }
            TrainedModel::AdaBoost(m) => ModelInfo { rounds: Some(m.stumps.len()), ..Default::default() },
            _ => ModelInfo::default(),
        }
    }

    /// Container bytes: network layout for the MLP, JSON for the others.
    pub fn to_bytes(&self) -> Vec<u8> {
        let body = match self {
            TrainedModel::Mlp(m) => {
                let mut w = Writer::new();
                w.u64(m.network.input_width as u64);
                w.network(&m.network);
                w.finish()
            }
            other => serde_json::to_vec(other).expect("model serializes"),
        };
        container::seal(self.family().payload_tag(), &body)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<TrainedModel> {
        let (tag, body) = container::open(bytes)?;
        let family = Family::from_tag(tag)
            .ok_or_else(|| ArtifactError::Corrupt(format!("{tag:?} payload is not a baseline model")))?;
        if family == Family::Mlp {
            let mut r = Reader::new(body);
            let input = r.count()?;
            let network = r.network(Some(input))?;
            r.finish()?;
            return Ok(TrainedModel::Mlp(MlpClassifier { network, loss_history: Vec::new() }));
        }
        let model: TrainedModel =
            serde_json::from_slice(body).map_err(|e| ArtifactError::Corrupt(format!("model body: {e}")))?;
        if model.family() != family {
            return Err(ArtifactError::Corrupt(format!("tag says {family}, body holds {}", model.family())).into());
        }
        Ok(model)
    }
}

fn tree_width(t: &Tree) -> usize {
    t.nodes
        .iter()
        .filter_map(|n| match n {
            TreeNode::Split { feature, .. } => Some(feature + 1),
            TreeNode::Leaf { .. } => None,
        })
        .max()
        .unwrap_or(0)
}

fn check_width(x: &Matrix, needed: usize) -> Result<()> {
    if x.cols() < needed {
        return shape_err(format!("tree splits on feature {} but input has {} columns", needed - 1, x.cols()));
    }
    Ok(())
}

fn tree_scores(t: &Tree, x: &Matrix) -> Result<Vec<f64>> {
    check_width(x, tree_width(t))?;
    Ok(t.scores(x))
}
