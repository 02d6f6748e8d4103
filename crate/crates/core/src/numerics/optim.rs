use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::numerics::matrix::dot;

/// Adam optimizer state for one parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;

    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return shape_err(format!(
                "adam state has {} slots, params {}, grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            ));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = self.learning_rate * bc2.sqrt() / bc1;
        let eps_hat = self.epsilon * bc2.sqrt();
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step * *m / (v.sqrt() + eps_hat);
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::step`].
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    state.step(params, grads)
}

#[derive(Debug, Clone, Copy)]
pub struct LbfgsOptions {
    pub history: usize,
    pub max_iterations: usize,
    /// Stop once the max-abs gradient component is at or below this.
    pub tolerance: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { history: 10, max_iterations: 500, tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Objective after each accepted iteration, starting with the initial point.
    pub trace: Vec<f64>,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, b| a.max(b.abs()))
}

/// Limited-memory BFGS with the two-loop recursion and a backtracking Armijo
/// line search. `f` returns the objective and writes the gradient.
pub fn lbfgs_minimize<F>(mut f: F, x0: Vec<f64>, opts: LbfgsOptions) -> Result<LbfgsResult>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    if opts.history == 0 {
        return param_err("L-BFGS history must be at least 1");
    }
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    if !fx.is_finite() {
        return Err(Error::NonFinite("objective at starting point".into()));
    }
    let mut trace = vec![fx];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut rho_hist: Vec<f64> = Vec::new();
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    for iter in 0..opts.max_iterations {
        let gnorm = max_abs(&g);
        if gnorm <= opts.tolerance {
            return Ok(LbfgsResult { x, objective: fx, grad_norm: gnorm, iterations: iter, trace });
        }

        // two-loop recursion
        let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
        let k = s_hist.len();
        let mut alpha = vec![0.0; k];
        for i in (0..k).rev() {
            alpha[i] = rho_hist[i] * dot(&s_hist[i], &d);
            for (dj, yj) in d.iter_mut().zip(&y_hist[i]) {
                *dj -= alpha[i] * yj;
            }
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0 / dot(&g, &g).sqrt().max(1.0)
        };
        d.iter_mut().for_each(|v| *v *= gamma);
        for i in 0..k {
            let beta = rho_hist[i] * dot(&y_hist[i], &d);
            for (dj, sj) in d.iter_mut().zip(&s_hist[i]) {
                *dj += (alpha[i] - beta) * sj;
            }
        }

        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            // not a descent direction; restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * d[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
                    if s_hist.len() == opts.history {
                        s_hist.remove(0);
                        y_hist.remove(0);
                        rho_hist.remove(0);
                    }
                    s_hist.push(s);
                    y_hist.push(y);
                    rho_hist.push(1.0 / sy);
                }
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                trace.push(fx);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // line search exhausted: the point is as good as floating point allows
            let gnorm = max_abs(&g);
            if gnorm <= opts.tolerance {
                return Ok(LbfgsResult { x, objective: fx, grad_norm: gnorm, iterations: iter, trace });
            }
            return Err(Error::Convergence { iterations: iter, grad_norm: gnorm });
        }
    }
    let gnorm = max_abs(&g);
    if gnorm <= opts.tolerance {
        Ok(LbfgsResult { x, objective: fx, grad_norm: gnorm, iterations: opts.max_iterations, trace })
    } else {
        Err(Error::Convergence { iterations: opts.max_iterations, grad_norm: gnorm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let mut st = AdamState::new(1, 1e-4);
        let mut p = [0.5];
        st.step(&mut p, &[1.0]).unwrap();
        assert!((p[0] - (0.5 - 1e-4)).abs() < 1e-10, "{}", p[0]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn zero_gradients_leave_params() {
        let mut st = AdamState::new(3, 1e-4);
        let mut p = [1.0, -2.0, 3.0];
        for _ in 0..50 {
            st.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 3.0]);
        assert_eq!(st.t, 50);
    }

    #[test]
    fn adam_on_square_decreases_magnitude() {
        // hand-iterated: with a constant-sign gradient each step is ≈ η toward 0
        let mut st = AdamState::new(1, 1e-4);
        let mut x = [1.0];
        let mut prev = 1.0_f64;
        for _ in 0..10 {
            let g = [2.0 * x[0]];
            st.step(&mut x, &g).unwrap();
            assert!(x[0].abs() < prev);
            prev = x[0].abs();
        }
        assert!((1.0 - x[0] - 10.0 * 1e-4).abs() < 1e-7, "{}", x[0]);
    }

    #[test]
    fn adam_length_mismatch() {
        let mut st = AdamState::new(2, 1e-3);
        assert!(matches!(st.step(&mut [0.0; 3], &[0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn adam_convex_quadratic_monotone_window() {
        let mut st = AdamState::new(2, 0.01);
        let mut x = [3.0, -2.0];
        let obj = |x: &[f64; 2]| x[0] * x[0] + 4.0 * x[1] * x[1];
        let mut history = vec![obj(&x)];
        for _ in 0..100 {
            let g = [2.0 * x[0], 8.0 * x[1]];
            st.step(&mut x, &g).unwrap();
            history.push(obj(&x));
        }
        assert!(history[100] < history[0]);
        for w in history[5..].windows(2) {
            assert!(w[1] <= w[0], "objective rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn lbfgs_rosenbrock() {
        let res = lbfgs_minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            vec![-1.2, 1.0],
            LbfgsOptions { max_iterations: 1000, ..Default::default() },
        )
        .unwrap();
        assert!((res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4, "{:?}", res.x);
        for w in res.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn lbfgs_reports_non_convergence() {
        let err = lbfgs_minimize(
            |x, g| {
                g[0] = 1.0;
                x[0]
            },
            vec![0.0],
            LbfgsOptions { max_iterations: 5, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }
}
