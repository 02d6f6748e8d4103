use crate::error::{param_err, shape_err, Error, Result};
use crate::numerics::matrix::{squared_distance, Matrix};

/// `exp(−gamma·‖x − y‖²)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return shape_err(format!("kernel arguments of length {} and {}", x.len(), y.len()));
    }
    if !(gamma > 0.0) {
        return param_err(format!("gamma must be positive, got {gamma}"));
    }
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, y)).exp()
}

/// RBF gamma for a length scale: `1 / (2·l²)`.
pub fn gamma_from_length_scale(length_scale: f64) -> f64 {
    1.0 / (2.0 * length_scale * length_scale)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return shape_err("cholesky needs a square matrix");
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical(format!("matrix not positive definite at pivot {j}")));
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            let (li, lj) = (l.row(i), l.row(j));
            for k in 0..j {
                s -= li[k] * lj[k];
            }
            l.set(i, j, s / d);
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if b.len() != n {
        return shape_err(format!("rhs of length {} for a {n}x{n} system", b.len()));
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = l.row(i);
        let s: f64 = (0..i).map(|k| row[k] * y[k]).sum();
        y[i] = (b[i] - s) / row[i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l.get(k, i) * x[k];
        }
        x[i] = s / l.get(i, i);
    }
    Ok(x)
}

/// Central-difference gradient estimate.
pub fn finite_difference_grad<F>(mut f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngState;

    #[test]
    fn rbf_values() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 5.0).unwrap(), 1.0);
        let k = rbf_kernel(&[0.0], &[1.0], 1.0).unwrap();
        assert!((k - 0.367879).abs() < 1e-6);
        assert_eq!(gamma_from_length_scale(0.125), 32.0);
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0).is_err());
        assert!(rbf_kernel(&[0.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn rbf_symmetric() {
        let mut rng = RngState::new(4);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
            let k = rbf_kernel(&x, &y, 0.7).unwrap();
            assert_eq!(k, rbf_kernel(&y, &x, 0.7).unwrap());
            assert!(k > 0.0 && k <= 1.0);
        }
    }

    #[test]
    fn finite_differences() {
        let g = finite_difference_grad(|x| x[0] * x[0], &[3.0], 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-6);
        let g = finite_difference_grad(|_| 4.0, &[1.0, 2.0], 1e-5);
        assert_eq!(g, vec![0.0, 0.0]);
        let mut rng = RngState::new(8);
        let x: Vec<f64> = (0..10).map(|_| rng.standard_normal()).collect();
        let g = finite_difference_grad(|v| v.iter().map(|a| a * a).sum(), &x, 1e-5);
        for (gi, xi) in g.iter().zip(&x) {
            assert!((gi - 2.0 * xi).abs() <= 1e-6 * (2.0 * xi).abs().max(1.0));
        }
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]])
            .unwrap();
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[1.0, 2.0, 3.0]).unwrap();
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a.get(i, j) * x[j]).sum();
            assert!((r - (i + 1) as f64).abs() < 1e-12);
        }
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&bad), Err(Error::Numerical(_))));
    }
}
