use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn from_predictions(truth: &[bool], predicted: &[bool]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return shape_err(format!("{} truths for {} predictions", truth.len(), predicted.len()));
        }
        let mut c = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// `0` when nothing was predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        harmonic(self.precision(), self.recall())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Area under the ROC curve as a fraction, from mean ranks (ties share the
/// average rank).
pub fn auc(truth: &[bool], scores: &[f64]) -> Result<f64> {
    if truth.len() != scores.len() {
        return shape_err(format!("{} truths for {} scores", truth.len(), scores.len()));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::NonFinite(format!("score {s}")));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined(format!("AUC needs both classes, got {pos} positive and {neg} negative")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps tied groups in integers
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, mean (i + j + 2) / 2
        let in_group = order[i..=j].iter().filter(|&&k| truth[k]).count() as u128;
        rank_sum2 += in_group * (i + j + 2) as u128;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    // U = R - p(p+1)/2, doubled
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

/// One fold's metrics, on the percent scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    pub confusion: ConfusionMatrix,
}

impl FoldMetrics {
    pub const NAMES: [&'static str; 5] = ["accuracy", "precision", "recall", "f1", "auc"];

    pub fn values(&self) -> [f64; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auc]
    }
}

/// Metrics for labels `score ≥ threshold`.
pub fn compute_metrics(truth: &[bool], scores: &[f64], threshold: f64) -> Result<FoldMetrics> {
    let predicted: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
    metrics_from_predictions(truth, &predicted, scores)
}

/// Confusion metrics from explicit labels, AUC from the scores.
pub fn metrics_from_predictions(truth: &[bool], predicted: &[bool], scores: &[f64]) -> Result<FoldMetrics> {
    let c = ConfusionMatrix::from_predictions(truth, predicted)?;
    if c.total() == 0 {
        return Err(Error::EmptyInput("no samples to score".into()));
    }
    let a = auc(truth, scores)?;
    Ok(FoldMetrics {
        accuracy: 100.0 * c.accuracy(),
        precision: 100.0 * c.precision(),
        recall: 100.0 * c.recall(),
        f1: 100.0 * c.f1(),
        auc: 100.0 * a,
        confusion: c,
    })
}

/// Accuracy of always answering "not a black spot": `1 − prevalence`.
pub fn all_negative_baseline(ds: &Dataset) -> Result<f64> {
    let labels = ds.labels();
    if labels.is_empty() {
        return Err(Error::EmptyInput("dataset has no rows".into()));
    }
    let c = ConfusionMatrix::from_predictions(labels, &vec![false; labels.len()])?;
    Ok(c.accuracy())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    if values.is_empty() {
        return MeanStd { mean: f64::NAN, std: f64::NAN };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    MeanStd { mean, std: var.sqrt() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auc: MeanStd,
}

impl MetricSummary {
    pub fn of(folds: &[FoldMetrics]) -> Self {
        let col = |k: usize| mean_std(&folds.iter().map(|f| f.values()[k]).collect::<Vec<_>>());
        MetricSummary { accuracy: col(0), precision: col(1), recall: col(2), f1: col(3), auc: col(4) }
    }

    pub fn values(&self) -> [MeanStd; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auc]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;
    use proptest::prelude::*;

    #[test]
    fn perfect_scores() {
        let m = compute_metrics(&[true, false, true, false], &[0.9, 0.1, 0.8, 0.3], 0.5).unwrap();
        assert_eq!(m.values(), [100.0; 5]);
    }

    #[test]
    fn hand_confusion() {
        // tp=1 fp=1 fn=1 tn=7
        let mut truth = vec![true, false, true];
        let mut pred = vec![true, true, false];
        truth.extend([false; 7]);
        pred.extend([false; 7]);
        let s: Vec<f64> = pred.iter().map(|&p| p as u8 as f64).collect();
        let m = metrics_from_predictions(&truth, &pred, &s).unwrap();
        assert_eq!(m.confusion, ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 7 });
        assert_eq!((m.precision, m.recall, m.f1, m.accuracy), (50.0, 50.0, 50.0, 80.0));
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let m = compute_metrics(&[true, false], &[0.1, 0.2], 0.5).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_scores_give_half_auc() {
        assert_eq!(auc(&[true, false, false, true, false], &[0.3; 5]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_auc_is_undefined() {
        assert!(matches!(auc(&[true, true], &[0.1, 0.2]), Err(Error::Undefined(_))));
    }

    fn pair_oracle(truth: &[bool], scores: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..truth.len() {
            for j in 0..truth.len() {
                if truth[i] && !truth[j] {
                    den += 1.0;
                    if scores[i] > scores[j] {
                        num += 1.0;
                    } else if scores[i] == scores[j] {
                        num += 0.5;
                    }
                }
            }
        }
        num / den
    }

    #[test]
    fn five_hundred_pairs_match_counting() {
        let mut rng = RngState::new(500);
        let truth: Vec<bool> = (0..500).map(|_| rng.below(4) == 0).collect();
        // coarse scores force many ties
        let scores: Vec<f64> = (0..500).map(|_| rng.below(50) as f64 / 10.0).collect();
        assert_eq!(auc(&truth, &scores).unwrap(), pair_oracle(&truth, &scores));
    }

    #[test]
    fn baseline_matches_prevalence() {
        use crate::dataset::tests::toy_schema;
        use crate::dataset::{Dataset, Value};
        let rec = vec![Value::Category(0), Value::Number(1.0), Value::Category(0)];
        let make = |labels: Vec<bool>| Dataset::from_records(toy_schema(), vec![rec.clone(); 4], labels).unwrap();
        assert_eq!(all_negative_baseline(&make(vec![true, false, false, false])).unwrap(), 0.75);
        assert_eq!(all_negative_baseline(&make(vec![false; 4])).unwrap(), 1.0);
        let bal = make(vec![true, true, false, false]);
        assert_eq!(all_negative_baseline(&bal).unwrap(), 0.5);
    }

    #[test]
    fn population_std() {
        let s = mean_std(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matches_brute_force(
            pairs in prop::collection::vec((any::<bool>(), 0u8..20), 2..60),
            threshold in 0u8..20,
        ) {
            let mut truth: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            truth[0] = true;
            truth[1] = false;
            let scores: Vec<f64> = pairs.iter().map(|p| p.1 as f64 / 19.0).collect();
            let t = threshold as f64 / 19.0;
            let m = compute_metrics(&truth, &scores, t).unwrap();
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for (y, s) in truth.iter().zip(&scores) {
                match (*y, *s >= t) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            prop_assert_eq!(m.confusion, ConfusionMatrix { tp, fp, fn_, tn });
            let n = truth.len() as f64;
            prop_assert_eq!(m.accuracy, 100.0 * ((tp + tn) as f64 / n));
            let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let r = tp as f64 / (tp + fn_) as f64;
            prop_assert_eq!(m.precision, 100.0 * p);
            prop_assert_eq!(m.recall, 100.0 * r);
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            prop_assert_eq!(m.f1, 100.0 * f);
            prop_assert!((m.auc - 100.0 * pair_oracle(&truth, &scores)).abs() <= 1e-12 * 100.0);
        }

        #[test]
        fn auc_ignores_monotone_transforms(
            pairs in prop::collection::vec((any::<bool>(), -5.0f64..5.0), 2..40),
        ) {
            let mut truth: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            truth[0] = true;
            truth[1] = false;
            let s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let t: Vec<f64> = s.iter().map(|v| (2.0 * v).exp() + 3.0).collect();
            prop_assert_eq!(auc(&truth, &s).unwrap(), auc(&truth, &t).unwrap());
        }
    }
}
