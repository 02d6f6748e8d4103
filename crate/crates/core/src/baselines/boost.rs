use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaBoostParams {
    pub rounds: usize,
}

impl Default for AdaBoostParams {
    fn default() -> Self {
        Self { rounds: 30 }
    }
}

/// Depth-one tree: `polarity` when `x[feature] ≤ threshold`, else `−polarity`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: f64,
}

impl Stump {
    pub fn predict(&self, row: &[f64]) -> f64 {
        if row[self.feature] <= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stumps: Vec<Stump>,
    pub alphas: Vec<f64>,
    /// Weighted error of each retained stump on its round's weights.
    pub errors: Vec<f64>,
    /// Label used when no stump was retained.
    pub majority: bool,
}

impl AdaBoostModel {
    /// Signed margin `Σ αₜ·hₜ(x)`.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if let Some(s) = self.stumps.iter().find(|s| s.feature >= x.cols()) {
            return shape_err(format!("stump on feature {} but input has {}", s.feature, x.cols()));
        }
        Ok(x
            .iter_rows()
            .map(|r| self.stumps.iter().zip(&self.alphas).map(|(s, a)| a * s.predict(r)).sum())
            .collect())
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<bool>> {
        let s = self.scores(x)?;
        if self.stumps.is_empty() {
            return Ok(vec![self.majority; x.rows()]);
        }
        Ok(s.into_iter().map(|v| v >= 0.0).collect())
    }
}

/// Lowest weighted-error stump; ties go to the lower feature, then the lower
/// threshold, then polarity +1.
fn best_stump(x: &Matrix, ys: &[f64], w: &[f64], order: &[Vec<u32>]) -> Option<(Stump, f64)> {
    let total: f64 = w.iter().sum();
    let mut best: Option<(Stump, f64)> = None;
    for (f, idx) in order.iter().enumerate() {
        // weight of rows on the left that are positive / negative
        let (mut lp, mut ln) = (0.0, 0.0);
        let tp: f64 = idx.iter().filter(|&&i| ys[i as usize] > 0.0).map(|&i| w[i as usize]).sum();
        let tn = total - tp;
        for k in 0..idx.len().saturating_sub(1) {
            let i = idx[k] as usize;
            if ys[i] > 0.0 {
                lp += w[i];
            } else {
                ln += w[i];
            }
            let (a, b) = (x.get(i, f), x.get(idx[k + 1] as usize, f));
            if a == b {
                continue;
            }
            let mut t = a + (b - a) / 2.0;
            if !(t < b) {
                t = a;
            }
            // polarity +1 errs on left negatives and right positives
            let err_plus = (ln + (tp - lp)) / total;
            let err_minus = (lp + (tn - ln)) / total;
            for (polarity, err) in [(1.0, err_plus), (-1.0, err_minus)] {
                if best.as_ref().is_none_or(|(_, e)| err < *e) {
                    best = Some((Stump { feature: f, threshold: t, polarity }, err));
                }
            }
        }
    }
    best
}

/// Discrete AdaBoost over decision stumps.
pub fn fit_adaboost(x: &Matrix, y: &[bool], params: &AdaBoostParams) -> Result<AdaBoostModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if x.rows() == 0 {
        return param_err("AdaBoost needs at least one row");
    }
    let n = x.rows();
    let ys: Vec<f64> = y.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect();
    let positives = y.iter().filter(|&&p| p).count();
    let majority = 2 * positives > n;
    let order: Vec<Vec<u32>> = (0..x.cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostModel { stumps: Vec::new(), alphas: Vec::new(), errors: Vec::new(), majority };
    for _ in 0..params.rounds {
        let Some((stump, err)) = best_stump(x, &ys, &w, &order) else { break };
        if err >= 0.5 {
            break;
        }
        let perfect = err <= 0.0;
        let e = err.max(1e-10);
        let alpha = 0.5 * ((1.0 - e) / e).ln();
        model.stumps.push(stump);
        model.alphas.push(alpha);
        model.errors.push(err);
        if perfect {
            break;
        }
        let correct: Vec<bool> = (0..n).map(|i| ys[i] * stump.predict(x.row(i)) > 0.0).collect();
        w = reweight(&w, &correct, alpha);
    }
    Ok(model)
}

/// Weights after one AdaBoost round, normalized.
pub fn reweight(w: &[f64], correct: &[bool], alpha: f64) -> Vec<f64> {
    let raw: Vec<f64> = w.iter().zip(correct).map(|(w, &c)| w * if c { (-alpha).exp() } else { alpha.exp() }).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}
