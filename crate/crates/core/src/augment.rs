//! MixUp augmentation: synthetic rows as convex combinations of sample pairs.

use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Error, Result};
use crate::numerics::{Matrix, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixupMode {
    /// Both partners drawn uniformly from the whole training set.
    Uniform,
    /// Second partner drawn from the first partner's class.
    IntraClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MixupConfig {
    pub pairs: usize,
    pub copies_per_pair: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mode: MixupMode,
}

impl Default for MixupConfig {
    fn default() -> Self {
        Self { pairs: 6000, copies_per_pair: 11, alpha: 0.2, beta: 0.2, mode: MixupMode::Uniform }
    }
}

impl MixupConfig {
    pub fn synthetic_rows(&self) -> usize {
        self.pairs * self.copies_per_pair
    }

    fn validate(&self) -> Result<()> {
        if self.copies_per_pair == 0 {
            return param_err("copies_per_pair must be at least 1");
        }
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return param_err(format!("mixup Beta shapes must be positive, got ({}, {})", self.alpha, self.beta));
        }
        Ok(())
    }
}

/// `(λ·x1 + (1−λ)·x2, λ·y1 + (1−λ)·y2)`.
pub fn mixup_pair(x1: &[f64], x2: &[f64], y1: f64, y2: f64, lambda: f64) -> Result<(Vec<f64>, f64)> {
    if x1.len() != x2.len() {
        return shape_err(format!("mixup of rows with {} and {} features", x1.len(), x2.len()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return param_err(format!("lambda must lie in [0, 1], got {lambda}"));
    }
    let x = x1.iter().zip(x2).map(|(a, b)| mix(*a, *b, lambda)).collect();
    Ok((x, mix(y1, y2, lambda)))
}

#[inline]
fn mix(a: f64, b: f64, lambda: f64) -> f64 {
    // clamp guards the convex-hull property against rounding
    let v = lambda * a + (1.0 - lambda) * b;
    v.clamp(a.min(b), a.max(b))
}

/// Appends `pairs × copies_per_pair` MixUp rows after the untouched originals.
///
/// Pair `p` draws its partners and its `copies_per_pair` mixing weights from
/// the child stream `rng.fork(p)`, so rows can be produced in any order.
/// Every synthetic row gets a fresh λ.
pub fn augment_training(
    x: &Matrix,
    y: &[f64],
    cfg: &MixupConfig,
    rng: &RngState,
) -> Result<(Matrix, Vec<f64>)> {
    augment_with_parents(x, y, cfg, rng).map(|a| (a.matrix, a.labels))
}

/// Augmented training set together with the parent indices of every synthetic row.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub matrix: Matrix,
    pub labels: Vec<f64>,
    /// `(i, j)` for synthetic row `n + s`, at position `s`.
    pub parents: Vec<(usize, usize)>,
}

pub fn augment_with_parents(
    x: &Matrix,
    y: &[f64],
    cfg: &MixupConfig,
    rng: &RngState,
) -> Result<Augmented> {
    cfg.validate()?;
    if x.rows() == 0 {
        return Err(Error::EmptyInput("cannot augment an empty training matrix".into()));
    }
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    let n = x.rows();
    let d = x.cols();
    let classes: [Vec<usize>; 2] = [
        (0..n).filter(|&i| y[i] < 0.5).collect(),
        (0..n).filter(|&i| y[i] >= 0.5).collect(),
    ];
    if cfg.mode == MixupMode::IntraClass && cfg.pairs > 0 {
        for (c, members) in classes.iter().enumerate() {
            if members.len() == 1 {
                return Err(Error::Augmentation(format!(
                    "intra-class mixup needs at least 2 members per class; class {c} has 1"
                )));
            }
        }
    }

    let total = n + cfg.synthetic_rows();
    let mut values = Vec::with_capacity(total * d);
    values.extend_from_slice(x.as_slice());
    let mut labels = Vec::with_capacity(total);
    labels.extend_from_slice(y);
    let mut parents = Vec::with_capacity(cfg.synthetic_rows());

    for p in 0..cfg.pairs {
        let mut prng = rng.fork(p as u64);
        let i = prng.below(n);
        let j = match cfg.mode {
            MixupMode::Uniform => prng.below(n),
            MixupMode::IntraClass => {
                let members = &classes[(y[i] >= 0.5) as usize];
                members[prng.below(members.len())]
            }
        };
        let (xi, xj) = (x.row(i), x.row(j));
        for _ in 0..cfg.copies_per_pair {
            let lambda = prng.beta(cfg.alpha, cfg.beta)?;
            values.extend(xi.iter().zip(xj).map(|(a, b)| mix(*a, *b, lambda)));
            labels.push(mix(y[i], y[j], lambda));
            parents.push((i, j));
        }
    }
    Ok(Augmented { matrix: Matrix::from_raw(total, d, values), labels, parents })
}

/// `1` iff `soft ≥ threshold`; ties go positive.
pub fn harden_labels(soft: &[f64], threshold: f64) -> Vec<bool> {
    soft.iter().map(|&s| s >= threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random(rows: usize, cols: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let mut rng = RngState::new(seed);
        let v = (0..rows * cols).map(|_| rng.uniform()).collect();
        let y = (0..rows).map(|i| (i % 3 == 0) as u8 as f64).collect();
        (Matrix::new(rows, cols, v).unwrap(), y)
    }

    #[test]
    fn pair_endpoints_and_midpoint() {
        let (x, y) = mixup_pair(&[1.0, 2.0], &[3.0, 4.0], 1.0, 0.0, 1.0).unwrap();
        assert_eq!((x, y), (vec![1.0, 2.0], 1.0));
        let (x, _) = mixup_pair(&[0.0, 2.0], &[2.0, 0.0], 0.0, 0.0, 0.5).unwrap();
        assert_eq!(x, vec![1.0, 1.0]);
        let (_, y) = mixup_pair(&[0.0], &[0.0], 1.0, 0.0, 0.3).unwrap();
        assert!((y - 0.3).abs() < 1e-15);
        assert!(mixup_pair(&[0.0], &[0.0, 1.0], 1.0, 0.0, 0.3).is_err());
        assert!(mixup_pair(&[0.0], &[1.0], 1.0, 0.0, 1.3).is_err());
    }

    #[test]
    fn canonical_count() {
        let (x, y) = random(1448, 3, 1);
        let (aug, labels) = augment_training(&x, &y, &MixupConfig::default(), &RngState::new(2)).unwrap();
        assert_eq!(aug.rows(), 67448);
        assert_eq!(labels.len(), 67448);
    }

    #[test]
    fn single_synthetic_row() {
        let (x, y) = random(10, 2, 3);
        let cfg = MixupConfig { pairs: 1, copies_per_pair: 1, ..Default::default() };
        let (aug, _) = augment_training(&x, &y, &cfg, &RngState::new(0)).unwrap();
        assert_eq!(aug.rows(), 11);
    }

    #[test]
    fn intra_class_labels_are_hard() {
        let (x, y) = random(30, 2, 4);
        let cfg = MixupConfig { pairs: 200, copies_per_pair: 3, mode: MixupMode::IntraClass, ..Default::default() };
        let (_, labels) = augment_training(&x, &y, &cfg, &RngState::new(1)).unwrap();
        assert!(labels.iter().all(|&l| l == 0.0 || l == 1.0));
    }

    #[test]
    fn intra_class_singleton_fails() {
        let x = Matrix::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        let cfg = MixupConfig { pairs: 2, mode: MixupMode::IntraClass, ..Default::default() };
        let err = augment_training(&x, &[0.0, 0.0, 1.0], &cfg, &RngState::new(0)).unwrap_err();
        assert!(matches!(err, Error::Augmentation(_)));
    }

    #[test]
    fn hardening() {
        assert_eq!(harden_labels(&[0.5, 0.0, 1.0, 0.3, 0.7], 0.5), vec![true, false, true, false, true]);
    }

    #[test]
    fn zero_pairs_is_identity() {
        let (x, y) = random(8, 2, 5);
        let cfg = MixupConfig { pairs: 0, ..Default::default() };
        let (aug, labels) = augment_training(&x, &y, &cfg, &RngState::new(0)).unwrap();
        assert_eq!(aug, x);
        assert_eq!(labels, y);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn count_prefix_hull_and_determinism(
            rows in 2usize..20,
            cols in 1usize..6,
            pairs in 0usize..15,
            copies in 1usize..5,
            alpha in 0.05f64..3.0,
            beta in 0.05f64..3.0,
            seed in any::<u64>(),
        ) {
            let (x, y) = random(rows, cols, seed);
            let cfg = MixupConfig { pairs, copies_per_pair: copies, alpha, beta, mode: MixupMode::Uniform };
            let rng = RngState::new(seed ^ 1);
            let out = augment_with_parents(&x, &y, &cfg, &rng).unwrap();
            let (aug, labels) = (&out.matrix, &out.labels);
            prop_assert_eq!(aug.rows(), rows + pairs * copies);
            prop_assert_eq!(&aug.as_slice()[..rows * cols], x.as_slice());
            for (s, &(i, j)) in out.parents.iter().enumerate() {
                let r = rows + s;
                for (c, &v) in aug.row(r).iter().enumerate() {
                    let (a, b) = (x.get(i, c), x.get(j, c));
                    prop_assert!(a.min(b) <= v && v <= a.max(b));
                }
                prop_assert!(y[i].min(y[j]) <= labels[r] && labels[r] <= y[i].max(y[j]));
            }
            let (again, labels2) = augment_training(&x, &y, &cfg, &rng).unwrap();
            prop_assert_eq!(&again, aug);
            prop_assert_eq!(&labels2, labels);
        }
    }
}
