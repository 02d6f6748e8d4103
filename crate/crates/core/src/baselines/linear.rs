use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::{dot, lbfgs_minimize, LbfgsOptions, Matrix, RngState};

/// `e^(−λ)·λᵏ/k!`, evaluated through logarithms.
pub fn poisson_pmf(k: u64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return param_err(format!("Poisson rate must be positive, got {lambda}"));
    }
    let log_fact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
    Ok((k as f64 * lambda.ln() - lambda - log_fact).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonParams {
    pub alpha: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for PoissonParams {
    fn default() -> Self {
        Self { alpha: 0.9, tol: 1e-5, max_iterations: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective after every accepted step, starting value first.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

impl PoissonModel {
    /// Predicted rate `exp(b + x·β)` per row.
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.coef.len() {
            return shape_err(format!("model has {} features, input {}", self.coef.len(), x.cols()));
        }
        Ok(x.iter_rows().map(|r| (self.intercept + dot(r, &self.coef)).exp()).collect())
    }
}

/// Ridge-penalized Poisson regression with log link, fitted by L-BFGS.
///
/// Minimizes `(1/n)·Σ(exp(ηᵢ) − yᵢηᵢ) + (α/2)·‖β‖²` with the intercept left
/// unpenalized.
pub fn fit_poisson_regression(x: &Matrix, y: &[f64], params: &PoissonParams) -> Result<PoissonModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} targets for {} rows", y.len(), x.rows()));
    }
    if x.rows() == 0 {
        return param_err("Poisson regression needs at least one row");
    }
    if !(params.alpha >= 0.0) {
        return param_err(format!("alpha must be non-negative, got {}", params.alpha));
    }
    let (n, d) = (x.rows(), x.cols());
    let inv_n = 1.0 / n as f64;
    let alpha = params.alpha;
    let objective = |w: &[f64], g: &mut [f64]| -> f64 {
        let (b, beta) = (w[0], &w[1..]);
        g.iter_mut().for_each(|v| *v = 0.0);
        let mut total = 0.0;
        for (row, &yi) in x.iter_rows().zip(y) {
            let eta = b + dot(row, beta);
            let mu = eta.exp();
            total += mu - yi * eta;
            let r = (mu - yi) * inv_n;
            g[0] += r;
            for (gk, xk) in g[1..].iter_mut().zip(row) {
                *gk += r * xk;
            }
        }
        let mut penalty = 0.0;
        for (gk, bk) in g[1..].iter_mut().zip(beta) {
            *gk += alpha * bk;
            penalty += bk * bk;
        }
        total * inv_n + 0.5 * alpha * penalty
    };
    let opts = LbfgsOptions { history: 10, max_iterations: params.max_iterations, tolerance: params.tol };
    let res = lbfgs_minimize(objective, vec![0.0; d + 1], opts)?;
    Ok(PoissonModel {
        intercept: res.x[0],
        coef: res.x[1..].to_vec(),
        iterations: res.iterations,
        grad_norm: res.grad_norm,
        trace: res.trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSvmParams {
    pub c: f64,
    pub epochs: usize,
    pub fit_intercept: bool,
}

impl Default for LinearSvmParams {
    fn default() -> Self {
        Self { c: 1.0, epochs: 100, fit_intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearSvmModel {
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.w.len() {
            return shape_err(format!("model has {} features, input {}", self.w.len(), x.cols()));
        }
        Ok(x.iter_rows().map(|r| dot(r, &self.w) + self.b).collect())
    }

    /// `(1/n)·Σ max(0, 1 − yᵢ·f(xᵢ))`.
    pub fn hinge_loss(&self, x: &Matrix, y: &[bool]) -> Result<f64> {
        let s = self.scores(x)?;
        Ok(s.iter().zip(y).map(|(s, &p)| (1.0 - sign(p) * s).max(0.0)).sum::<f64>() / y.len().max(1) as f64)
    }
}

fn sign(p: bool) -> f64 {
    if p {
        1.0
    } else {
        -1.0
    }
}

/// Soft-margin linear SVM by Pegasos subgradient descent.
///
/// Solves `λ/2·‖w‖² + (1/n)·Σ hinge` with `λ = 1/(c·n)`. The bias rides along
/// as a constant feature. Returns the average of the iterates from the second
/// half of training.
pub fn fit_linear_svm(x: &Matrix, y: &[bool], params: &LinearSvmParams, rng: &RngState) -> Result<LinearSvmModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if x.rows() == 0 {
        return param_err("linear SVM needs at least one row");
    }
    if !(params.c > 0.0) || params.epochs == 0 {
        return param_err("linear SVM needs c > 0 and at least one epoch");
    }
    let (n, d) = (x.rows(), x.cols());
    let lambda = 1.0 / (params.c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let bias_feature = if params.fit_intercept { 1.0 } else { 0.0 };
    let mut w = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut averaged = 0usize;
    let total = n * params.epochs;
    let mut order: Vec<usize> = (0..n).collect();
    let mut t = 0usize;
    for epoch in 0..params.epochs {
        rng.fork(epoch as u64).shuffle(&mut order);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let row = x.row(i);
            let yi = sign(y[i]);
            let margin = yi * (dot(row, &w[..d]) + w[d] * bias_feature);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (wk, xk) in w[..d].iter_mut().zip(row) {
                    *wk += eta * yi * xk;
                }
                w[d] += eta * yi * bias_feature;
            }
            let len = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len > radius {
                let s = radius / len;
                w.iter_mut().for_each(|v| *v *= s);
            }
            if 2 * t > total {
                averaged += 1;
                let k = averaged as f64;
                for (a, v) in avg.iter_mut().zip(&w) {
                    *a += (v - *a) / k;
                }
            }
        }
    }
    let b = avg[d] * bias_feature;
    avg.truncate(d);
    Ok(LinearSvmModel { w: avg, b })
}
