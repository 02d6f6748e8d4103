use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::{squared_distance, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 4 }
    }
}

/// A memorized training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<bool>,
}

pub fn fit_knn(x: &Matrix, y: &[bool], params: &KnnParams) -> Result<KnnModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if x.rows() == 0 {
        return param_err("k-NN needs a non-empty training set");
    }
    if params.k == 0 || params.k > x.rows() {
        return param_err(format!("k = {} with {} training rows", params.k, x.rows()));
    }
    Ok(KnnModel { k: params.k, x: x.clone(), y: y.to_vec() })
}

impl KnnModel {
    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances go to the lower index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> =
            self.x.iter_rows().enumerate().map(|(i, r)| (squared_distance(query, r), i)).collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by);
            d.truncate(self.k);
        }
        d.sort_unstable_by(by);
        d.into_iter().map(|(_, i)| i).collect()
    }

    /// Fraction of positive neighbours per query row.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.x.cols() {
            return shape_err(format!("model has {} features, input {}", self.x.cols(), x.cols()));
        }
        Ok(x
            .iter_rows()
            .map(|q| self.neighbors(q).iter().filter(|&&i| self.y[i]).count() as f64 / self.k as f64)
            .collect())
    }
}

/// Labels (`score ≥ 0.5`) and scores for `x_query`.
pub fn knn_classify(x_train: &Matrix, y_train: &[bool], x_query: &Matrix, k: usize) -> Result<(Vec<bool>, Vec<f64>)> {
    let m = fit_knn(x_train, y_train, &KnnParams { k })?;
    let s = m.scores(x_query)?;
    Ok((s.iter().map(|&v| v >= 0.5).collect(), s))
}
