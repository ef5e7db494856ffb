//! Random forest: bagged Gini trees with per-split feature subsampling.
//! The forest probability is the arithmetic mean of per-tree leaf values
//! (the positive-class fraction in each leaf).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, GiniCriterion, GrowParams, SplitConstraints, Tree};
use super::{ForestParams, LearnError};
use crate::matrix::Matrix;
use crate::rng::Rng;

/// A fitted forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    /// Substream seed each tree was grown from, in tree order.
    pub tree_seeds: Vec<u64>,
    pub mtry_used: u32,
    pub input_width: usize,
}

impl ForestModel {
    /// Mean of per-tree leaf values, accumulated in fixed tree order.
    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        let n_trees = self.trees.len() as f64;
        (0..x.rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                sum / n_trees
            })
            .collect()
    }
}

/// Train `n_trees` Gini trees, each on a seeded bootstrap resample with
/// `mtry` candidate features per split. Bootstrap draws are stored as
/// per-row weights, so sample multisets never duplicate rows in memory.
///
/// Tree order is fixed and every tree draws from its own substream;
/// results are identical regardless of worker count.
pub fn train_random_forest(
    x: &Matrix,
    y: &[u8],
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel, LearnError> {
    let n = x.rows();
    if n == 0 {
        return Err(LearnError::InvalidHyperparameters {
            message: "cannot train a forest on zero rows".to_string(),
        });
    }
    let p = x.cols();
    let mtry = params
        .mtry
        .map(|m| m as usize)
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .min(p)
        .max(1);
    let grow = GrowParams {
        max_depth: params.max_depth,
        constraints: SplitConstraints {
            min_leaf: f64::from(params.min_samples_leaf),
            min_split: 2.0 * f64::from(params.min_samples_leaf).max(1.0),
        },
        mtry: Some(mtry),
    };

    let tree_seeds: Vec<u64> = (0..params.n_trees)
        .map(|t| Rng::substream_seed(seed, &format!("tree/{t}")))
        .collect();

    let trees: Vec<Tree> = tree_seeds
        .par_iter()
        .map(|&tree_seed| {
            let mut rng = Rng::new(tree_seed);
            if params.bootstrap {
                let mut weights = vec![0.0f64; n];
                for _ in 0..n {
                    weights[rng.gen_range(n)] += 1.0;
                }
                let rows: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
                let criterion = GiniCriterion {
                    labels: y,
                    weights: Some(&weights),
                };
                grow_tree(x, rows, &criterion, &grow, &mut rng)
            } else {
                let criterion = GiniCriterion {
                    labels: y,
                    weights: None,
                };
                grow_tree(x, (0..n).collect(), &criterion, &grow, &mut rng)
            }
        })
        .collect();

    Ok(ForestModel {
        trees,
        tree_seeds,
        mtry_used: mtry as u32,
        input_width: p,
    })
}
