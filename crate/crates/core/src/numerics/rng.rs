//! Deterministic random generation.
//!
//! The generator is PCG32 (XSH-RR output over a 64-bit LCG), implemented here
//! so that draw sequences are bit-identical across platforms and crate
//! upgrades. Child streams are derived from the *root* seed and a label, never
//! from the parent's current position, so the order in which children are
//! created does not matter.

use crate::error::{param_err, Result};

const PCG_MULT: u64 = 6364136223846793005;

#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    state: u64,
    inc: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        let stream = splitmix64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut rng = RngState { seed, state: 0, inc: (stream << 1) | 1 };
        rng.step();
        rng.state = rng.state.wrapping_add(splitmix64(seed));
        rng.step();
        rng
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream keyed by an integer label.
    pub fn fork(&self, label: u64) -> RngState {
        RngState::new(splitmix64(self.seed.rotate_left(17) ^ splitmix64(label.wrapping_add(1))))
    }

    /// Child stream keyed by a text label.
    pub fn fork_named(&self, label: &str) -> RngState {
        self.fork(fnv1a(label.as_bytes()))
    }

    #[inline]
    fn step(&mut self) {
        self.state = self.state.wrapping_mul(PCG_MULT).wrapping_add(self.inc);
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). Lemire's multiply-and-reject.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low >= n || low >= n.wrapping_neg() % n {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from [0, n), in draw order.
    pub fn sample_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Gamma(shape, 1) by Marsaglia–Tsang, boosted for shape < 1.
    pub fn gamma(&mut self, shape: f64) -> Result<f64> {
        if !(shape > 0.0 && shape.is_finite()) {
            return param_err(format!("gamma shape must be positive, got {shape}"));
        }
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0)?;
            return Ok(g * self.uniform_open().powf(1.0 / shape));
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.standard_normal();
            let v = 1.0 + c * x;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            let u = self.uniform_open();
            if u < 1.0 - 0.0331 * x.powi(4) || u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
                return Ok(d * v);
            }
        }
    }

    /// Beta(alpha, beta) draw strictly inside (0, 1).
    ///
    /// Jöhnk's rejection method when both shapes are below one, otherwise the
    /// ratio of two Gamma variates. Jöhnk is run in log space because
    /// `U^(1/0.2)` underflows long before the ratio does.
    pub fn beta(&mut self, alpha: f64, beta: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return param_err(format!("beta shapes must be positive, got ({alpha}, {beta})"));
        }
        let draw = if alpha < 1.0 && beta < 1.0 {
            loop {
                let log_x = self.uniform_open().ln() / alpha;
                let log_y = self.uniform_open().ln() / beta;
                let hi = log_x.max(log_y);
                let log_sum = hi + ((log_x - hi).exp() + (log_y - hi).exp()).ln();
                if log_sum <= 0.0 {
                    break if log_x <= log_y {
                        1.0 / (1.0 + (log_y - log_x).exp())
                    } else {
                        1.0 - 1.0 / (1.0 + (log_x - log_y).exp())
                    };
                }
            }
        } else {
            let x = self.gamma(alpha)?;
            let y = self.gamma(beta)?;
            x / (x + y)
        };
        Ok(draw.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// `beta_sample` in free-function form.
pub fn beta_sample(rng: &mut RngState, alpha: f64, beta: f64) -> Result<f64> {
    rng.beta(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(alpha: f64, beta: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = RngState::new(seed);
        let draws: Vec<f64> = (0..n).map(|_| rng.beta(alpha, beta).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RngState::new(42);
        let mut b = RngState::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(RngState::new(1).next_u64(), RngState::new(2).next_u64());
    }

    #[test]
    fn fork_ignores_parent_position() {
        let a = RngState::new(9);
        let mut b = RngState::new(9);
        b.next_u64();
        assert_eq!(a.fork(3).next_u64(), b.fork(3).next_u64());
        assert_ne!(a.fork(3).next_u64(), a.fork(4).next_u64());
        assert_eq!(a.fork_named("x").next_u64(), b.fork_named("x").next_u64());
    }

    #[test]
    fn below_stays_in_range_and_covers() {
        let mut rng = RngState::new(5);
        let mut seen = [false; 7];
        for _ in 0..1000 {
            let v = rng.below(7);
            seen[v] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn symmetric_small_beta_mean_is_half() {
        let (mean, _) = moments(0.2, 0.2, 100_000, 11);
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn uniform_beta_variance() {
        let (_, var) = moments(1.0, 1.0, 100_000, 12);
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn beta_draws_in_open_interval() {
        let mut rng = RngState::new(13);
        for &(a, b) in &[(0.2, 0.2), (0.05, 0.05), (1.0, 1.0), (0.5, 3.0), (4.0, 0.3)] {
            for _ in 0..20_000 {
                let x = rng.beta(a, b).unwrap();
                assert!(x > 0.0 && x < 1.0, "draw {x} for ({a},{b})");
            }
        }
    }

    #[test]
    fn beta_moments_within_three_standard_errors() {
        for &(a, b, seed) in &[(0.2, 0.2, 1u64), (2.0, 5.0, 2), (0.5, 0.7, 3), (3.0, 0.6, 4)] {
            let n = 100_000;
            let (mean, var) = moments(a, b, n, seed);
            let true_mean = a / (a + b);
            let true_var = a * b / ((a + b).powi(2) * (a + b + 1.0));
            let se = (true_var / n as f64).sqrt();
            assert!((mean - true_mean).abs() < 3.0 * se, "({a},{b}) mean {mean} vs {true_mean}");
            // variance of the sample variance needs the fourth central moment; 5% is a loose proxy
            assert!((var - true_var).abs() < 0.05 * true_var, "({a},{b}) var {var} vs {true_var}");
        }
    }

    #[test]
    fn beta_rejects_bad_shapes() {
        let mut rng = RngState::new(0);
        assert!(rng.beta(0.0, 1.0).is_err());
        assert!(rng.beta(1.0, -2.0).is_err());
        assert!(rng.beta(f64::NAN, 1.0).is_err());
    }
}
