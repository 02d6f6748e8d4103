use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::numerics::kernel::rbf_unchecked;
use crate::numerics::{cholesky, cholesky_solve, gamma_from_length_scale, Matrix, RngState};

/// Which training rows a capped kernel model kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsample {
    pub available: usize,
    pub used: usize,
}

impl Subsample {
    pub fn was_capped(&self) -> bool {
        self.used < self.available
    }
}

/// At most `cap` row indices with class proportions preserved, sorted ascending.
///
/// Each class keeps `round(cap·n_c/n)` rows (at least one when present),
/// drawn without replacement.
pub fn stratified_subsample(y: &[bool], cap: usize, rng: &mut RngState) -> Vec<usize> {
    let n = y.len();
    if n <= cap {
        return (0..n).collect();
    }
    let pos: Vec<usize> = (0..n).filter(|&i| y[i]).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| !y[i]).collect();
    let mut keep_pos = ((cap as f64) * pos.len() as f64 / n as f64).round() as usize;
    if !pos.is_empty() {
        keep_pos = keep_pos.clamp(1, pos.len());
    }
    let keep_pos = keep_pos.min(cap);
    let keep_neg = (cap - keep_pos).min(neg.len());
    let mut out: Vec<usize> = rng
        .sample_without_replacement(pos.len(), keep_pos)
        .into_iter()
        .map(|i| pos[i])
        .chain(rng.sample_without_replacement(neg.len(), keep_neg).into_iter().map(|i| neg[i]))
        .collect();
    out.sort_unstable();
    out
}

fn sign(p: bool) -> f64 {
    if p {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RbfSvmParams {
    pub gamma: f64,
    pub c: f64,
    pub cap: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for RbfSvmParams {
    fn default() -> Self {
        Self { gamma: gamma_from_length_scale(0.125), c: 1.0, cap: 4000, tol: 1e-3, max_iterations: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfSvmModel {
    pub gamma: f64,
    pub c: f64,
    /// Support vectors (rows with αᵢ > 0).
    pub support: Matrix,
    /// `αᵢ·yᵢ` per support vector.
    pub dual_coef: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
    pub converged: bool,
    pub subsample: Subsample,
    /// Full α vector over the (subsampled) training rows.
    #[serde(skip)]
    pub alpha: Vec<f64>,
    #[serde(skip)]
    pub labels: Vec<bool>,
}

impl RbfSvmModel {
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.support.cols() && self.support.rows() > 0 {
            return shape_err(format!("model has {} features, input {}", self.support.cols(), x.cols()));
        }
        Ok(x
            .iter_rows()
            .map(|q| {
                self.support.iter_rows().zip(&self.dual_coef).map(|(s, c)| c * rbf_unchecked(s, q, self.gamma)).sum::<f64>()
                    + self.b
            })
            .collect())
    }
}

/// Dual soft-margin SVM by SMO with second-order working-set selection.
pub fn fit_rbf_svm(x: &Matrix, y: &[bool], params: &RbfSvmParams, rng: &RngState) -> Result<RbfSvmModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if !(params.gamma > 0.0 && params.c > 0.0 && params.tol > 0.0) || params.cap == 0 {
        return param_err("RBF SVM needs gamma, c, tol and cap all positive");
    }
    if x.rows() == 0 {
        return param_err("RBF SVM needs at least one row");
    }
    let keep = stratified_subsample(y, params.cap, &mut rng.fork_named("kernel-subsample"));
    let xs = x.select_rows(&keep);
    let ys: Vec<f64> = keep.iter().map(|&i| sign(y[i])).collect();
    let n = xs.rows();
    let c = params.c;

    let mut q = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = ys[i] * ys[j] * rbf_unchecked(xs.row(i), xs.row(j), params.gamma);
            q[i * n + j] = v;
            q[j * n + i] = v;
        }
    }
    let qd: Vec<f64> = (0..n).map(|i| q[i * n + i]).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let is_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);
    const TAU: f64 = 1e-12;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], ys[t]) && -ys[t] * grad[t] > gmax {
                gmax = -ys[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], ys[t]) {
                continue;
            }
            let v = -ys[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel == usize::MAX {
                continue;
            }
            let diff = gmax - v;
            if diff > 0.0 {
                let a = qd[i_sel] + qd[t] - 2.0 * ys[i_sel] * ys[t] * q[i_sel * n + t];
                let obj = -(diff * diff) / if a > 0.0 { a } else { TAU };
                if obj < best_obj {
                    best_obj = obj;
                    j_sel = t;
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < params.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q[i * n + j];
        if ys[i] != ys[j] {
            let mut quad = qd[i] + qd[j] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q[t * n + i] * di + q[t * n + j] * dj;
        }
    }

    // offset from free vectors, or the midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..n {
        let yg = ys[t] * grad[t];
        if alpha[t] >= c {
            if ys[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if ys[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else {
        0.0
    };

    let sv: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    Ok(RbfSvmModel {
        gamma: params.gamma,
        c,
        support: xs.select_rows(&sv),
        dual_coef: sv.iter().map(|&t| alpha[t] * ys[t]).collect(),
        b: -rho,
        iterations,
        converged,
        subsample: Subsample { available: x.rows(), used: n },
        alpha,
        labels: keep.iter().map(|&i| y[i]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpParams {
    pub gamma: f64,
    pub ridge: f64,
    pub cap: usize,
}

impl Default for GpParams {
    fn default() -> Self {
        Self { gamma: gamma_from_length_scale(0.125), ridge: 0.1, cap: 4000 }
    }
}

/// Kernel ridge regression on ±1 targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSurrogateModel {
    pub gamma: f64,
    pub ridge: f64,
    /// Diagonal jitter that had to be added for a stable factorization.
    pub jitter: f64,
    pub x: Matrix,
    pub coef: Vec<f64>,
    pub subsample: Subsample,
}

impl GpSurrogateModel {
    pub fn scores(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.cols() != self.x.cols() {
            return shape_err(format!("model has {} features, input {}", self.x.cols(), x.cols()));
        }
        Ok(x
            .iter_rows()
            .map(|q| self.x.iter_rows().zip(&self.coef).map(|(r, c)| c * rbf_unchecked(r, q, self.gamma)).sum())
            .collect())
    }
}

pub fn fit_gp_surrogate(x: &Matrix, y: &[bool], params: &GpParams, rng: &RngState) -> Result<GpSurrogateModel> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if !(params.gamma > 0.0 && params.ridge >= 0.0) || params.cap == 0 {
        return param_err("GP surrogate needs gamma > 0, ridge ≥ 0 and a positive cap");
    }
    if x.rows() == 0 {
        return param_err("GP surrogate needs at least one row");
    }
    let keep = stratified_subsample(y, params.cap, &mut rng.fork_named("kernel-subsample"));
    let xs = x.select_rows(&keep);
    let targets: Vec<f64> = keep.iter().map(|&i| sign(y[i])).collect();
    let n = xs.rows();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf_unchecked(xs.row(i), xs.row(j), params.gamma);
            k.set(i, j, v);
            k.set(j, i, v);
        }
    }
    let mut jitter = 0.0;
    let factor = loop {
        let mut a = k.clone();
        for i in 0..n {
            a.set(i, i, a.get(i, i) + params.ridge + jitter);
        }
        match cholesky(&a) {
            Ok(l) => break l,
            Err(Error::Numerical(msg)) => {
                jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
                if jitter > 1e-2 {
                    return Err(Error::Numerical(format!("kernel system not positive definite after jitter: {msg}")));
                }
            }
            Err(e) => return Err(e),
        }
    };
    let coef = cholesky_solve(&factor, &targets)?;
    Ok(GpSurrogateModel {
        gamma: params.gamma,
        ridge: params.ridge,
        jitter,
        x: xs,
        coef,
        subsample: Subsample { available: x.rows(), used: n },
    })
}
