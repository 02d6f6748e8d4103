use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::matrix::{dot, Matrix};

/// Fitted principal component model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// k × d, orthonormal rows, ordered by explained variance.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted descending and the matching eigenvectors as the
/// rows of a matrix. Each eigenvector's largest-magnitude entry is made
/// positive so the output is sign-deterministic.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return shape_err(format!("eigen-decomposition needs a square matrix, got {:?}", a.shape()));
    }
    let mut m = a.as_slice().to_vec();
    // eigenvectors accumulated as rows: v[k*n..] is the k-th vector
    let mut v = Matrix::identity(n).into_vec();

    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 || n < 2 {
        return Ok(sorted(n, m.iter().step_by(n + 1).copied().collect(), v));
    }
    let threshold = 1e-10 * scale;

    for _sweep in 0..100 {
        let mut off_max = 0.0_f64;
        for p in 0..n {
            for q in p + 1..n {
                off_max = off_max.max(m[p * n + q].abs());
            }
        }
        if off_max <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                let (vp, vq) = if p < q {
                    let (lo, hi) = v.split_at_mut(q * n);
                    (&mut lo[p * n..(p + 1) * n], &mut hi[..n])
                } else {
                    unreachable!()
                };
                for k in 0..n {
                    let a = vp[k];
                    let b = vq[k];
                    vp[k] = c * a - s * b;
                    vq[k] = s * a + c * b;
                }
            }
        }
    }
    let diag = (0..n).map(|i| m[i * n + i]).collect();
    Ok(sorted(n, diag, v))
}

fn sorted(n: usize, diag: Vec<f64>, v: Vec<f64>) -> (Vec<f64>, Matrix) {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[b].total_cmp(&diag[a]).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(n);
    let mut vecs = Vec::with_capacity(n * n);
    for &i in &order {
        values.push(diag[i]);
        let row = &v[i * n..(i + 1) * n];
        let pivot = row.iter().fold(0.0_f64, |acc, &x| if x.abs() > acc.abs() { x } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        vecs.extend(row.iter().map(|x| x * sign));
    }
    (values, Matrix::from_raw(n, n, vecs))
}

impl PcaModel {
    pub fn fit(x: &Matrix, k: usize) -> Result<Self> {
        if k > x.cols() {
            return param_err(format!("k = {k} exceeds {} columns", x.cols()));
        }
        if x.rows() < 2 {
            return shape_err("PCA needs at least two rows");
        }
        let cov = x.covariance()?;
        let (values, vectors) = symmetric_eigen(&cov)?;
        let d = x.cols();
        let components = Matrix::from_raw(k, d, vectors.as_slice()[..k * d].to_vec());
        let explained_variance = values[..k].iter().map(|v| v.max(0.0)).collect();
        Ok(Self { mean: x.column_means(), components, explained_variance })
    }

    pub fn k(&self) -> usize {
        self.components.rows()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.mean.len();
        if x.cols() != d {
            return shape_err(format!("PCA fitted on {d} columns, got {}", x.cols()));
        }
        let k = self.k();
        let mut out = Vec::with_capacity(x.rows() * k);
        let mut centered = vec![0.0; d];
        for row in x.iter_rows() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            for j in 0..k {
                out.push(dot(&centered, self.components.row(j)));
            }
        }
        Ok(Matrix::from_raw(x.rows(), k, out))
    }

    pub fn inverse_transform(&self, z: &Matrix) -> Result<Matrix> {
        if z.cols() != self.k() {
            return shape_err(format!("expected {} components, got {}", self.k(), z.cols()));
        }
        let mut out = z.matmul(&self.components)?;
        for r in 0..out.rows() {
            for (v, m) in out.row_mut(r).iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        Ok(out)
    }
}

pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaModel> {
    PcaModel::fit(x, k)
}

pub fn pca_transform(model: &PcaModel, x: &Matrix) -> Result<Matrix> {
    model.transform(x)
}
