use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Result};
use crate::numerics::RngState;

/// Assignment of every sample to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn validation_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }
}

/// Stratified k-fold split.
///
/// Each class is shuffled independently and dealt round-robin; the negative
/// class continues the deal where the positive class stopped, so both the
/// per-fold positive counts and the per-fold totals differ by at most one.
pub fn stratified_kfold(labels: &[bool], k: usize, rng: &mut RngState) -> Result<FoldPlan> {
    if k < 2 {
        return Err(DatasetError::Stratification(format!("k must be at least 2, got {k}")).into());
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    for (name, class) in [("positive", &pos), ("negative", &neg)] {
        if class.len() < k {
            return Err(DatasetError::Stratification(format!(
                "{name} class has {} members, fewer than k = {k}",
                class.len()
            ))
            .into());
        }
    }
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    let mut assignment = vec![0; labels.len()];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        assignment[i] = slot % k;
    }
    Ok(FoldPlan { k, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(pos: usize, total: usize) -> Vec<bool> {
        (0..total).map(|i| i < pos).collect()
    }

    #[test]
    fn canonical_counts_give_28_or_29_positives() {
        let y = labels(142, 1811);
        let plan = stratified_kfold(&y, 5, &mut RngState::new(1)).unwrap();
        let mut per_fold = [0usize; 5];
        let mut sizes = [0usize; 5];
        for (i, &f) in plan.assignment.iter().enumerate() {
            per_fold[f] += y[i] as usize;
            sizes[f] += 1;
        }
        assert!(per_fold.iter().all(|&c| c == 28 || c == 29), "{per_fold:?}");
        assert_eq!(per_fold.iter().sum::<usize>(), 142);
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn balanced_two_fold() {
        let y: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
        let plan = stratified_kfold(&y, 2, &mut RngState::new(3)).unwrap();
        for f in 0..2 {
            let v = plan.validation_indices(f);
            assert_eq!(v.len(), 5);
            assert!(v.iter().filter(|&&i| y[i]).count() >= 2);
            assert!(v.iter().filter(|&&i| y[i]).count() <= 3);
        }
    }

    #[test]
    fn seeded_and_errors() {
        let y = labels(20, 100);
        let a = stratified_kfold(&y, 5, &mut RngState::new(7)).unwrap();
        let b = stratified_kfold(&y, 5, &mut RngState::new(7)).unwrap();
        assert_eq!(a, b);
        assert!(stratified_kfold(&labels(3, 50), 5, &mut RngState::new(0)).is_err());
        assert!(stratified_kfold(&y, 1, &mut RngState::new(0)).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_indices(
            y in proptest::collection::vec(any::<bool>(), 10..200),
            k in 2usize..6,
            seed in any::<u64>(),
        ) {
            let pos = y.iter().filter(|&&l| l).count();
            prop_assume!(pos >= k && y.len() - pos >= k);
            let plan = stratified_kfold(&y, k, &mut RngState::new(seed)).unwrap();
            let mut seen = vec![0usize; y.len()];
            for f in 0..k {
                for i in plan.validation_indices(f) {
                    seen[i] += 1;
                }
                let t = plan.train_indices(f);
                let v = plan.validation_indices(f);
                prop_assert_eq!(t.len() + v.len(), y.len());
                let share = pos as f64 / k as f64;
                let fp = v.iter().filter(|&&i| y[i]).count() as f64;
                prop_assert!((fp - share).abs() < 1.0 + 1e-9);
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }
    }
}
