use serde::{Deserialize, Serialize};

use crate::error::{param_err, shape_err, Result};
use crate::numerics::{Matrix, RngState};

/// `1 − Σ pᵢ²`.
pub fn gini_impurity(counts: &[f64]) -> Result<f64> {
    if counts.iter().any(|c| !(*c >= 0.0)) {
        return param_err("class counts must be non-negative");
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return param_err("gini impurity of an empty node");
    }
    Ok(1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>())
}

fn gini2(neg: f64, pos: f64) -> f64 {
    let t = neg + pos;
    1.0 - (neg / t) * (neg / t) - (pos / t) * (pos / t)
}

/// Features examined at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureBag {
    All,
    /// `⌈√d⌉` features drawn per split.
    Sqrt,
    Count(usize),
}

impl FeatureBag {
    fn size(self, d: usize) -> usize {
        match self {
            FeatureBag::All => d,
            FeatureBag::Sqrt => (d as f64).sqrt().ceil() as usize,
            FeatureBag::Count(k) => k.min(d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    /// Exhaustive search over midpoints between consecutive distinct values.
    Best,
    /// One uniform threshold in `[min, max)` per candidate feature.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { counts: [u64; 2] },
}

/// Nodes in a flat arena; node 0 is the root. Rows with `x ≤ threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

/// Improvements at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub feature_bag: FeatureBag,
    pub splitter: Splitter,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { feature_bag: FeatureBag::All, splitter: Splitter::Best }
    }
}

impl Tree {
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { .. } => return at,
                TreeNode::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Positive fraction of the leaf reached by `row`.
    pub fn score_row(&self, row: &[f64]) -> f64 {
        match &self.nodes[self.leaf_index(row)] {
            TreeNode::Leaf { counts } => counts[1] as f64 / (counts[0] + counts[1]) as f64,
            TreeNode::Split { .. } => unreachable!(),
        }
    }

    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        x.iter_rows().map(|r| self.score_row(r)).collect()
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((at, d)) = stack.pop() {
            best = best.max(d);
            if let TreeNode::Split { left, right, .. } = self.nodes[at] {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
        best
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

fn better(c: &Candidate, best: &Option<Candidate>) -> bool {
    match best {
        None => true,
        Some(b) => {
            c.gain > b.gain
                || (c.gain == b.gain && (c.feature, c.threshold).partial_cmp(&(b.feature, b.threshold)) == Some(std::cmp::Ordering::Less))
        }
    }
}

/// Grows one unpruned tree on `rows` (which may repeat, as in a bootstrap).
pub fn grow_tree(x: &Matrix, y: &[bool], rows: Vec<usize>, params: &TreeParams, rng: &mut RngState) -> Tree {
    let d = x.cols();
    let bag = params.feature_bag.size(d).max(1);
    let mut nodes: Vec<TreeNode> = Vec::new();
    // (node slot, rows)
    nodes.push(TreeNode::Leaf { counts: [0, 0] });
    let mut work = vec![(0usize, rows)];
    let mut features: Vec<usize> = (0..d).collect();
    let mut pairs: Vec<(f64, bool)> = Vec::new();
    while let Some((slot, idx)) = work.pop() {
        let pos = idx.iter().filter(|&&i| y[i]).count() as u64;
        let counts = [idx.len() as u64 - pos, pos];
        if counts[0] == 0 || counts[1] == 0 {
            nodes[slot] = TreeNode::Leaf { counts };
            continue;
        }
        let total = idx.len() as f64;
        let parent = gini2(counts[0] as f64, counts[1] as f64);
        let mut best: Option<Candidate> = None;
        let mut examined = 0;
        let mut drawn = 0;
        // lazily drawn feature order; constant features do not count towards the bag
        while examined < bag && drawn < d {
            let f = if bag >= d {
                drawn
            } else {
                let j = drawn + rng.below(d - drawn);
                features.swap(drawn, j);
                features[drawn]
            };
            drawn += 1;
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = x.get(i, f);
                (lo.min(v), hi.max(v))
            });
            if !(lo < hi) {
                continue;
            }
            examined += 1;
            match params.splitter {
                Splitter::Best => {
                    pairs.clear();
                    pairs.extend(idx.iter().map(|&i| (x.get(i, f), y[i])));
                    pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
                    let (mut ln, mut lp) = (0.0, 0.0);
                    for k in 0..pairs.len() - 1 {
                        if pairs[k].1 {
                            lp += 1.0;
                        } else {
                            ln += 1.0;
                        }
                        let (a, b) = (pairs[k].0, pairs[k + 1].0);
                        if a == b {
                            continue;
                        }
                        let (rn, rp) = (counts[0] as f64 - ln, counts[1] as f64 - lp);
                        let nl = ln + lp;
                        let gain = parent - nl / total * gini2(ln, lp) - (total - nl) / total * gini2(rn, rp);
                        let mut t = a + (b - a) / 2.0;
                        if !(t < b) {
                            t = a;
                        }
                        let c = Candidate { gain, feature: f, threshold: t };
                        if better(&c, &best) {
                            best = Some(c);
                        }
                    }
                }
                Splitter::Random => {
                    let mut t = rng.uniform_range(lo, hi);
                    if !(t < hi) {
                        t = lo;
                    }
                    let (mut ln, mut lp) = (0.0, 0.0);
                    for &i in &idx {
                        if x.get(i, f) <= t {
                            if y[i] {
                                lp += 1.0;
                            } else {
                                ln += 1.0;
                            }
                        }
                    }
                    let (rn, rp) = (counts[0] as f64 - ln, counts[1] as f64 - lp);
                    let nl = ln + lp;
                    let gain = parent - nl / total * gini2(ln, lp) - (total - nl) / total * gini2(rn, rp);
                    let c = Candidate { gain, feature: f, threshold: t };
                    if better(&c, &best) {
                        best = Some(c);
                    }
                }
            }
        }
        match best {
            Some(c) if c.gain > MIN_GAIN => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, c.feature) <= c.threshold);
                let left = nodes.len();
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes.push(TreeNode::Leaf { counts: [0, 0] });
                nodes[slot] = TreeNode::Split { feature: c.feature, threshold: c.threshold, left, right: left + 1 };
                // right pushed first so the left subtree is expanded first
                work.push((left + 1, r));
                work.push((left, l));
            }
            _ => nodes[slot] = TreeNode::Leaf { counts },
        }
    }
    Tree { nodes }
}

fn check_xy(x: &Matrix, y: &[bool], min_rows: usize) -> Result<()> {
    if y.len() != x.rows() {
        return shape_err(format!("{} labels for {} rows", y.len(), x.rows()));
    }
    if x.rows() < min_rows {
        return param_err(format!("need at least {min_rows} training rows, got {}", x.rows()));
    }
    Ok(())
}

pub fn fit_decision_tree(x: &Matrix, y: &[bool], params: &TreeParams, rng: &RngState) -> Result<Tree> {
    check_xy(x, y, 1)?;
    Ok(grow_tree(x, y, (0..x.rows()).collect(), params, &mut rng.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub feature_bag: FeatureBag,
}

impl ForestParams {
    pub fn random_forest() -> Self {
        Self { n_trees: 30, bootstrap: true, feature_bag: FeatureBag::Sqrt }
    }

    pub fn extra_trees() -> Self {
        Self { n_trees: 30, bootstrap: false, feature_bag: FeatureBag::Sqrt }
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        Self::random_forest()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Accuracy on out-of-bag rows; `None` without bootstrap or when no row was left out.
    pub oob_accuracy: Option<f64>,
}

impl Forest {
    /// Mean of the per-tree leaf scores.
    pub fn scores(&self, x: &Matrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        x.iter_rows().map(|r| self.trees.iter().map(|t| t.score_row(r)).sum::<f64>() / k).collect()
    }
}

fn fit_ensemble(x: &Matrix, y: &[bool], params: &ForestParams, splitter: Splitter, rng: &RngState) -> Result<Forest> {
    check_xy(x, y, 2)?;
    if params.n_trees == 0 {
        return param_err("an ensemble needs at least one tree");
    }
    let n = x.rows();
    let tree_params = TreeParams { feature_bag: params.feature_bag, splitter };
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut oob_sum = vec![0.0; n];
    let mut oob_hits = vec![0usize; n];
    for t in 0..params.n_trees {
        let mut trng = rng.fork(t as u64);
        let rows: Vec<usize> = if params.bootstrap { (0..n).map(|_| trng.below(n)).collect() } else { (0..n).collect() };
        let tree = grow_tree(x, y, rows.clone(), &tree_params, &mut trng);
        if params.bootstrap {
            let mut in_bag = vec![false; n];
            rows.iter().for_each(|&i| in_bag[i] = true);
            for i in (0..n).filter(|&i| !in_bag[i]) {
                oob_sum[i] += tree.score_row(x.row(i));
                oob_hits[i] += 1;
            }
        }
        trees.push(tree);
    }
    let scored: Vec<usize> = (0..n).filter(|&i| oob_hits[i] > 0).collect();
    let oob_accuracy = (!scored.is_empty()).then(|| {
        let ok = scored.iter().filter(|&&i| (oob_sum[i] / oob_hits[i] as f64 >= 0.5) == y[i]).count();
        ok as f64 / scored.len() as f64
    });
    Ok(Forest { trees, oob_accuracy })
}

/// Bootstrap + per-split feature bagging; tree `i` draws from `rng.fork(i)`.
pub fn fit_random_forest(x: &Matrix, y: &[bool], params: &ForestParams, rng: &RngState) -> Result<Forest> {
    fit_ensemble(x, y, params, Splitter::Best, rng)
}

/// Random thresholds per candidate feature; no bootstrap by default.
pub fn fit_extra_trees(x: &Matrix, y: &[bool], params: &ForestParams, rng: &RngState) -> Result<Forest> {
    fit_ensemble(x, y, params, Splitter::Random, rng)
}
