//! Gradient boosting: depth-limited regression trees fit to the logistic
//! loss's negative gradients, with damped Newton leaf values and shrinkage.
//!
//! Trees grow breadth-first over globally pre-sorted feature columns: each
//! feature is sorted once per fit and every level is one linear scan per
//! feature, accumulating split statistics for all open nodes at once.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Criterion, NewtonAcc, NewtonCriterion, Tree, TreeNode};
use super::{cross_entropy, sigmoid, GbmParams, LearnError};
use crate::matrix::Matrix;

/// A fitted boosted ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    /// Log-odds of the training base rate.
    pub prior: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
    pub input_width: usize,
    /// Training cross-entropy after 0, 1, ..., n_rounds trees.
    pub round_losses: Vec<f64>,
}

impl GbmModel {
    /// Raw additive score before the logistic link.
    pub fn raw_score(&self, row: &[f64]) -> f64 {
        let tree_sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        self.prior + self.shrinkage * tree_sum
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| sigmoid(self.raw_score(x.row(i))))
            .collect()
    }
}

const SETTLED: u32 = u32::MAX;

struct ScanState {
    left: NewtonAcc,
    last_value: f64,
    started: bool,
    best: Option<(f64, f64)>,
}

/// One open node during breadth-first growth.
struct OpenNode {
    arena_id: u32,
    total: NewtonAcc,
}

/// Candidate evaluation for one feature across every open node: a single
/// pass over the globally sorted column, visiting each node's rows in
/// ascending feature order.
fn scan_feature(
    x: &Matrix,
    feature: usize,
    sorted_rows: &[u32],
    slot_of_row: &[u32],
    open: &[OpenNode],
    splittable: &[bool],
    criterion: &NewtonCriterion<'_>,
    min_leaf: f64,
) -> Vec<Option<(f64, f64)>> {
    let parent_potential: Vec<f64> = open.iter().map(|o| criterion.potential(&o.total)).collect();
    let mut states: Vec<ScanState> = open
        .iter()
        .map(|_| ScanState {
            left: NewtonAcc::default(),
            last_value: f64::NAN,
            started: false,
            best: None,
        })
        .collect();
    for &row in sorted_rows {
        let slot = slot_of_row[row as usize];
        if slot == SETTLED || !splittable[slot as usize] {
            continue;
        }
        let slot = slot as usize;
        let value = x.get(row as usize, feature);
        let state = &mut states[slot];
        if state.started && value != state.last_value {
            let right = criterion.subtract(&open[slot].total, &state.left);
            if criterion.count(&state.left) >= min_leaf && criterion.count(&right) >= min_leaf {
                let gain = criterion.potential(&state.left) + criterion.potential(&right)
                    - parent_potential[slot];
                if gain > 0.0 && state.best.is_none_or(|(g, _)| gain > g) {
                    state.best = Some((gain, midpoint(state.last_value, value)));
                }
            }
        }
        criterion.add(&mut state.left, row as usize);
        state.last_value = value;
        state.started = true;
    }
    states.into_iter().map(|s| s.best).collect()
}

enum SlotAction {
    Leaf(f64),
    Split {
        feature: u32,
        threshold: f64,
        left_slot: u32,
        right_slot: u32,
    },
}

/// Grow one depth-limited regression tree and record every training row's
/// leaf value in `row_values`.
fn grow_level_wise(
    x: &Matrix,
    presorted: &[Vec<u32>],
    criterion: &NewtonCriterion<'_>,
    max_depth: u32,
    min_leaf: f64,
    min_split: f64,
    row_values: &mut [f64],
) -> Tree {
    let n = x.rows();
    let mut nodes = vec![TreeNode::Leaf { value: 0.0 }];
    let mut slot_of_row = vec![0u32; n];
    let mut root_total = NewtonAcc::default();
    for row in 0..n {
        criterion.add(&mut root_total, row);
    }
    let mut open = vec![OpenNode {
        arena_id: 0,
        total: root_total,
    }];

    for _depth in 0..max_depth {
        if open.is_empty() {
            break;
        }
        let splittable: Vec<bool> = open
            .iter()
            .map(|o| criterion.count(&o.total) >= min_split)
            .collect();

        let per_feature: Vec<Vec<Option<(f64, f64)>>> = (0..x.cols())
            .into_par_iter()
            .map(|f| {
                scan_feature(
                    x,
                    f,
                    &presorted[f],
                    &slot_of_row,
                    &open,
                    &splittable,
                    criterion,
                    min_leaf,
                )
            })
            .collect();

        // Reduce candidates in ascending feature order; strictly greater
        // gain wins, so the lowest feature takes ties.
        let mut chosen: Vec<Option<(f64, usize, f64)>> = vec![None; open.len()];
        for (f, candidates) in per_feature.iter().enumerate() {
            for (slot, candidate) in candidates.iter().enumerate() {
                if let Some((gain, threshold)) = candidate {
                    if chosen[slot].is_none_or(|(g, _, _)| *gain > g) {
                        chosen[slot] = Some((*gain, f, *threshold));
                    }
                }
            }
        }

        let mut actions: Vec<SlotAction> = Vec::with_capacity(open.len());
        let mut next_open: Vec<OpenNode> = Vec::new();
        for (slot, node) in open.iter().enumerate() {
            match chosen[slot] {
                Some((_, feature, threshold)) => {
                    let left_id = nodes.len() as u32;
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    let right_id = nodes.len() as u32;
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes[node.arena_id as usize] = TreeNode::Split {
                        feature: feature as u32,
                        threshold,
                        left: left_id,
                        right: right_id,
                    };
                    let left_slot = next_open.len() as u32;
                    next_open.push(OpenNode {
                        arena_id: left_id,
                        total: NewtonAcc::default(),
                    });
                    let right_slot = next_open.len() as u32;
                    next_open.push(OpenNode {
                        arena_id: right_id,
                        total: NewtonAcc::default(),
                    });
                    actions.push(SlotAction::Split {
                        feature: feature as u32,
                        threshold,
                        left_slot,
                        right_slot,
                    });
                }
                None => {
                    let value = criterion.leaf_value(&node.total);
                    nodes[node.arena_id as usize] = TreeNode::Leaf { value };
                    actions.push(SlotAction::Leaf(value));
                }
            }
        }

        for row in 0..n {
            let slot = slot_of_row[row];
            if slot == SETTLED {
                continue;
            }
            match &actions[slot as usize] {
                SlotAction::Leaf(value) => {
                    row_values[row] = *value;
                    slot_of_row[row] = SETTLED;
                }
                SlotAction::Split {
                    feature,
                    threshold,
                    left_slot,
                    right_slot,
                } => {
                    let child = if x.get(row, *feature as usize) < *threshold {
                        *left_slot
                    } else {
                        *right_slot
                    };
                    slot_of_row[row] = child;
                    criterion.add(&mut next_open[child as usize].total, row);
                }
            }
        }
        open = next_open;
    }

    // Depth cap reached: everything still open becomes a leaf.
    if !open.is_empty() {
        let values: Vec<f64> = open
            .iter()
            .map(|o| criterion.leaf_value(&o.total))
            .collect();
        for (node, &value) in open.iter().zip(&values) {
            nodes[node.arena_id as usize] = TreeNode::Leaf { value };
        }
        for row in 0..n {
            let slot = slot_of_row[row];
            if slot != SETTLED {
                row_values[row] = values[slot as usize];
            }
        }
    }
    Tree { nodes }
}

/// Sort every feature column once; ties order by row for determinism.
fn presort_columns(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.cols())
        .into_par_iter()
        .map(|f| {
            let mut order: Vec<u32> = (0..x.rows() as u32).collect();
            order.sort_by(|&a, &b| {
                x.get(a as usize, f)
                    .partial_cmp(&x.get(b as usize, f))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order
        })
        .collect()
}

/// Boost for the configured number of rounds. The prior is the log-odds
/// of the training base rate; each round fits one tree to the current
/// negative gradients and adds it scaled by the shrinkage.
pub fn train_gbm(x: &Matrix, y: &[u8], params: &GbmParams) -> Result<GbmModel, LearnError> {
    let n = x.rows();
    if n == 0 {
        return Err(LearnError::InvalidHyperparameters {
            message: "cannot train gbm on zero rows".to_string(),
        });
    }
    let positives = y.iter().filter(|&&v| v == 1).count() as f64;
    let rate = (positives / n as f64).clamp(1e-12, 1.0 - 1e-12);
    let prior = (rate / (1.0 - rate)).ln();

    let mut raw = vec![prior; n];
    let mut trees = Vec::with_capacity(params.n_rounds as usize);
    let mut round_losses = Vec::with_capacity(params.n_rounds as usize + 1);
    let presorted = if params.n_rounds > 0 {
        presort_columns(x)
    } else {
        Vec::new()
    };

    let mut probs = vec![0.0f64; n];
    let mut grad = vec![0.0f64; n];
    let mut hess = vec![0.0f64; n];
    for round in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(raw[i]);
            probs[i] = p;
            grad[i] = p - f64::from(y[i]);
            hess[i] = p * (1.0 - p);
        }
        let loss = cross_entropy(&probs, y);
        if !loss.is_finite() {
            return Err(LearnError::NonFiniteLoss {
                at: format!("gbm round {round}"),
            });
        }
        round_losses.push(loss);

        let criterion = NewtonCriterion {
            grad: &grad,
            hess: &hess,
            lambda: params.leaf_lambda,
        };
        let mut row_values = vec![0.0f64; n];
        let tree = grow_level_wise(
            x,
            &presorted,
            &criterion,
            params.max_depth,
            f64::from(params.min_samples_leaf),
            2.0 * f64::from(params.min_samples_leaf),
            &mut row_values,
        );
        for i in 0..n {
            raw[i] += params.shrinkage * row_values[i];
        }
        trees.push(tree);
    }
    for i in 0..n {
        probs[i] = sigmoid(raw[i]);
    }
    round_losses.push(cross_entropy(&probs, y));

    Ok(GbmModel {
        prior,
        shrinkage: params.shrinkage,
        trees,
        input_width: x.cols(),
        round_losses,
    })
}
