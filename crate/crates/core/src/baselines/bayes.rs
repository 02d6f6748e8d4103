use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NaiveBayesParams {
    /// Added to every variance, as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

/// Smallest variance ever used; only matters when every feature is constant.
const ABSOLUTE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// Index 0 is the negative class.
    pub log_prior: [f64; 2],
    pub mean: [Vec<f64>; 2],
    pub var: [Vec<f64>; 2],
}

pub fn fit_gaussian_nb(x: &Matrix, y: &[bool], params: &NaiveBayesParams) -> Result<GaussianNbModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    let d = x.cols();
    let mut count = [0usize; 2];
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for (row, &p) in x.iter_rows().zip(y) {
        let c = p as usize;
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    if count[0] == 0 || count[1] == 0 {
        return param_err("naive Bayes needs both classes in the training data");
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= count[c] as f64);
    }
    let mut var = [vec![0.0; d], vec![0.0; d]];
    for (row, &p) in x.iter_rows().zip(y) {
        let c = p as usize;
        for ((s, v), m) in var[c].iter_mut().zip(row).zip(&mean[c]) {
            *s += (v - m) * (v - m);
        }
    }
    for c in 0..2 {
        var[c].iter_mut().for_each(|s| *s /= count[c] as f64);
    }
    let overall = x.column_means();
    let mut max_var: f64 = 0.0;
    for (j, mu) in overall.iter().enumerate() {
        let v = x.column(j).iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.rows() as f64;
        max_var = max_var.max(v);
    }
    let eps = (params.var_smoothing * max_var).max(ABSOLUTE_FLOOR);
    for c in 0..2 {
        var[c].iter_mut().for_each(|s| *s += eps);
    }
    let n = x.rows() as f64;
    Ok(GaussianNbModel {
        log_prior: [(count[0] as f64 / n).ln(), (count[1] as f64 / n).ln()],
        mean,
        var,
    })
}

impl GaussianNbModel {
    fn joint_log_likelihood(&self, row: &[f64], c: usize) -> f64 {
        let mut s = self.log_prior[c];
        for ((v, m), s2) in row.iter().zip(&self.mean[c]).zip(&self.var[c]) {
            s -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2);
        }
        s
    }

    /// Posterior `[P(neg|x), P(pos|x)]` per row.
    pub fn posteriors(&self, x: &Matrix) -> Result<Vec<[f64; 2]>> {
        if x.cols() != self.mean[0].len() {
            return shape_err(format!("model has {} features, input {}", self.mean[0].len(), x.cols()));
        }
        Ok(x
            .iter_rows()
            .map(|row| {
                let l = [self.joint_log_likelihood(row, 0), self.joint_log_likelihood(row, 1)];
                let top = l[0].max(l[1]);
                let lse = top + ((l[0] - top).exp() + (l[1] - top).exp()).ln();
                [(l[0] - lse).exp(), (l[1] - lse).exp()]
            })
            .collect())
    }

    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.posteriors(x)?.into_iter().map(|p| p[1]).collect())
    }
}
