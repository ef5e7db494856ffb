//! Shared decision-tree machinery: the node arena, split criteria, and
//! exact greedy split search.
//!
//! Split thresholds are midpoints between consecutive distinct sorted
//! feature values. Ties in gain resolve to the lowest feature slot, then
//! the lowest threshold.

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::rng::Rng;

/// One node: either a routing split or a leaf value. Rows with
/// `x[feature] < threshold` go left, everything else goes right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        value: f64,
    },
}

/// A decision tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf(value: f64) -> Tree {
        Tree {
            nodes: vec![TreeNode::Leaf { value }],
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut id = 0usize;
        loop {
            match &self.nodes[id] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[*feature as usize] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// A chosen split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitDecision {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Count constraints applied to every candidate split. Counts are
/// bootstrap-weighted for classification trees and plain row counts for
/// boosting trees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConstraints {
    pub min_leaf: f64,
    pub min_split: f64,
}

/// A split objective over per-row statistics.
///
/// `potential` is chosen so that the impurity decrease of a candidate
/// split is exactly `potential(left) + potential(right) - potential(node)`.
pub trait Criterion: Sync {
    type Acc: Copy + Default + Send;

    fn add(&self, acc: &mut Self::Acc, row: usize);
    fn subtract(&self, total: &Self::Acc, left: &Self::Acc) -> Self::Acc;
    fn count(&self, acc: &Self::Acc) -> f64;
    fn potential(&self, acc: &Self::Acc) -> f64;
    fn leaf_value(&self, acc: &Self::Acc) -> f64;
}

/// Gini impurity over (optionally weighted) binary labels. The potential
/// is (W1^2 + W0^2) / W, the negated weighted Gini mass up to a constant.
pub struct GiniCriterion<'a> {
    pub labels: &'a [u8],
    pub weights: Option<&'a [f64]>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GiniAcc {
    w: f64,
    w_pos: f64,
}

impl Criterion for GiniCriterion<'_> {
    type Acc = GiniAcc;

    #[inline]
    fn add(&self, acc: &mut GiniAcc, row: usize) {
        let w = self.weights.map_or(1.0, |ws| ws[row]);
        acc.w += w;
        if self.labels[row] == 1 {
            acc.w_pos += w;
        }
    }

    fn subtract(&self, total: &GiniAcc, left: &GiniAcc) -> GiniAcc {
        GiniAcc {
            w: total.w - left.w,
            w_pos: total.w_pos - left.w_pos,
        }
    }

    fn count(&self, acc: &GiniAcc) -> f64 {
        acc.w
    }

    fn potential(&self, acc: &GiniAcc) -> f64 {
        if acc.w <= 0.0 {
            return 0.0;
        }
        let neg = acc.w - acc.w_pos;
        (acc.w_pos * acc.w_pos + neg * neg) / acc.w
    }

    fn leaf_value(&self, acc: &GiniAcc) -> f64 {
        if acc.w > 0.0 {
            acc.w_pos / acc.w
        } else {
            0.0
        }
    }
}

/// Newton gain for boosting: per-row gradients and hessians of the
/// logistic loss, damped by `lambda`. The potential is G^2 / (H + lambda)
/// and leaf values are the damped Newton step sum(residual) / (H + lambda).
pub struct NewtonCriterion<'a> {
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NewtonAcc {
    pub g: f64,
    pub h: f64,
    pub n: f64,
}

impl Criterion for NewtonCriterion<'_> {
    type Acc = NewtonAcc;

    #[inline]
    fn add(&self, acc: &mut NewtonAcc, row: usize) {
        acc.g += self.grad[row];
        acc.h += self.hess[row];
        acc.n += 1.0;
    }

    fn subtract(&self, total: &NewtonAcc, left: &NewtonAcc) -> NewtonAcc {
        NewtonAcc {
            g: total.g - left.g,
            h: total.h - left.h,
            n: total.n - left.n,
        }
    }

    fn count(&self, acc: &NewtonAcc) -> f64 {
        acc.n
    }

    fn potential(&self, acc: &NewtonAcc) -> f64 {
        let denom = acc.h + self.lambda;
        if denom > 0.0 {
            acc.g * acc.g / denom
        } else {
            0.0
        }
    }

    fn leaf_value(&self, acc: &NewtonAcc) -> f64 {
        let denom = acc.h + self.lambda;
        if denom > 0.0 {
            -acc.g / denom
        } else {
            0.0
        }
    }
}

/// Midpoint between consecutive distinct values, nudged so the split
/// keeps `a` strictly left even when rounding collapses the midpoint.
#[inline]
pub(crate) fn midpoint(a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    if m > a {
        m
    } else {
        b
    }
}

/// Exact greedy split search over the given rows and candidate features.
///
/// Returns the (feature, threshold) with maximal impurity decrease, or
/// None when no candidate improves the criterion. `features` must be in
/// ascending order; lowest feature and then lowest threshold win ties.
pub fn best_split<C: Criterion>(
    x: &Matrix,
    rows: &[usize],
    features: &[usize],
    criterion: &C,
    constraints: &SplitConstraints,
) -> Option<SplitDecision> {
    let mut total = C::Acc::default();
    for &r in rows {
        criterion.add(&mut total, r);
    }
    if criterion.count(&total) < constraints.min_split || rows.len() < 2 {
        return None;
    }
    let parent_potential = criterion.potential(&total);

    let mut best: Option<SplitDecision> = None;
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &f in features {
        scratch.clear();
        scratch.extend(rows.iter().map(|&r| (x.get(r, f), r)));
        scratch.sort_by(|a, b| a.partial_cmp(b).unwrap());

        let mut left = C::Acc::default();
        let mut prev_value = f64::NAN;
        for k in 0..scratch.len() {
            let (v, r) = scratch[k];
            if k > 0 && v != prev_value {
                let left_count = criterion.count(&left);
                let right = criterion.subtract(&total, &left);
                if left_count >= constraints.min_leaf
                    && criterion.count(&right) >= constraints.min_leaf
                {
                    let gain =
                        criterion.potential(&left) + criterion.potential(&right) - parent_potential;
                    if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                        best = Some(SplitDecision {
                            feature: f,
                            threshold: midpoint(prev_value, v),
                            gain,
                        });
                    }
                }
            }
            criterion.add(&mut left, r);
            prev_value = v;
        }
    }
    best
}

/// Growth limits for [`grow_tree`].
#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    /// None grows until nodes are pure or unsplittable.
    pub max_depth: Option<u32>,
    pub constraints: SplitConstraints,
    /// Candidate features per split; None uses all features.
    pub mtry: Option<usize>,
}

/// Grow a tree by recursive partitioning (depth-first, left child first).
///
/// When `mtry` is set, each node draws its own candidate-feature subset
/// from `rng` in visit order, so growth is deterministic per seed.
pub fn grow_tree<C: Criterion>(
    x: &Matrix,
    rows: Vec<usize>,
    criterion: &C,
    params: &GrowParams,
    rng: &mut Rng,
) -> Tree {
    let p = x.cols();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut stack: Vec<(usize, Vec<usize>, u32)> = vec![(0, rows, 0)];
    while let Some((id, node_rows, depth)) = stack.pop() {
        let mut total = C::Acc::default();
        for &r in &node_rows {
            criterion.add(&mut total, r);
        }
        let at_depth_cap = params.max_depth.is_some_and(|d| depth >= d);
        let decision = if at_depth_cap {
            None
        } else {
            let features: Vec<usize> = match params.mtry {
                Some(m) if m < p => rng.sample_distinct(p, m),
                _ => (0..p).collect(),
            };
            best_split(x, &node_rows, &features, criterion, &params.constraints)
        };
        match decision {
            None => {
                nodes[id] = TreeNode::Leaf {
                    value: criterion.leaf_value(&total),
                };
            }
            Some(split) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = node_rows
                    .into_iter()
                    .partition(|&r| x.get(r, split.feature) < split.threshold);
                let left_id = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                let right_id = nodes.len();
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[id] = TreeNode::Split {
                    feature: split.feature as u32,
                    threshold: split.threshold,
                    left: left_id as u32,
                    right: right_id as u32,
                };
                stack.push((right_id, right_rows, depth + 1));
                stack.push((left_id, left_rows, depth + 1));
            }
        }
    }
    Tree { nodes }
}
