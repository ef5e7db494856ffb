//! Stacked super learner: out-of-fold probabilities from the base
//! candidates feed a meta learner; the bases are refit on all training
//! rows for inference.
//!
//! Seed discipline: every fit inside a super learner draws its seed from
//! the spec seed via a named substream: `folds` for the fold assignment,
//! `fold/{f}/candidate/{j}` for fold models, `refit/{j}` for full-data
//! base refits, and `meta` for the meta learner. Candidate specs' own
//! seed fields are ignored here so that two super learners with the same
//! root seed share identical meta features and refit bases.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learners::{train, LearnError, LearnerFamily, LearnerSpec, TrainedModel};
use crate::matrix::Matrix;
use crate::preprocess::{kfold, FoldAssignment, PreprocessError};
use crate::rng::Rng;

/// Errors from super-learner construction.
#[derive(Debug)]
pub enum StackError {
    InvalidSpec {
        message: String,
    },
    /// A fold-model failure, annotated with its (fold, candidate) task.
    FoldTask {
        fold: u32,
        candidate: usize,
        source: LearnError,
    },
    Folds(PreprocessError),
    Learn(LearnError),
}

impl fmt::Display for StackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackError::InvalidSpec { message } => {
                write!(f, "invalid super-learner spec: {message}")
            }
            StackError::FoldTask {
                fold,
                candidate,
                source,
            } => {
                write!(f, "fold {fold}, candidate {candidate}: {source}")
            }
            StackError::Folds(e) => write!(f, "fold assignment: {e}"),
            StackError::Learn(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for StackError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            StackError::FoldTask { source, .. } => Some(source),
            StackError::Folds(e) => Some(e),
            StackError::Learn(e) => Some(e),
            StackError::InvalidSpec { .. } => None,
        }
    }
}

impl From<LearnError> for StackError {
    fn from(e: LearnError) -> Self {
        StackError::Learn(e)
    }
}

/// Candidate set, meta learner, fold count, and root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLearnerSpec {
    /// Ordered candidate list; the order defines meta-feature columns.
    pub candidates: Vec<LearnerSpec>,
    /// Meta learner; the neural network or gradient boosting.
    pub meta: LearnerSpec,
    pub k: usize,
    pub seed: u64,
}

impl SuperLearnerSpec {
    pub fn validate(&self) -> Result<(), StackError> {
        if self.candidates.is_empty() {
            return Err(StackError::InvalidSpec {
                message: "candidate list is empty".to_string(),
            });
        }
        if self
            .candidates
            .iter()
            .any(|c| c.family() == LearnerFamily::Glm)
        {
            return Err(StackError::InvalidSpec {
                message: "the glm family is excluded from stacking".to_string(),
            });
        }
        if !matches!(self.meta.family(), LearnerFamily::Mlp | LearnerFamily::Gbm) {
            return Err(StackError::InvalidSpec {
                message: format!("meta family must be mlp or gbm, got {}", self.meta.family()),
            });
        }
        if self.k < 2 {
            return Err(StackError::InvalidSpec {
                message: format!("k must be >= 2, got {}", self.k),
            });
        }
        for c in &self.candidates {
            c.validate()?;
        }
        self.meta.validate()?;
        Ok(())
    }

    fn fold_model_spec(&self, fold: u32, candidate: usize) -> LearnerSpec {
        LearnerSpec {
            params: self.candidates[candidate].params.clone(),
            seed: Rng::substream_seed(self.seed, &format!("fold/{fold}/candidate/{candidate}")),
        }
    }

    fn refit_spec(&self, candidate: usize) -> LearnerSpec {
        LearnerSpec {
            params: self.candidates[candidate].params.clone(),
            seed: Rng::substream_seed(self.seed, &format!("refit/{candidate}")),
        }
    }

    fn meta_spec(&self) -> LearnerSpec {
        LearnerSpec {
            params: self.meta.params.clone(),
            seed: Rng::substream_seed(self.seed, "meta"),
        }
    }

    pub fn folds_seed(&self) -> u64 {
        Rng::substream_seed(self.seed, "folds")
    }
}

/// Out-of-fold probability matrix: entry (i, j) comes from candidate j
/// trained on every fold except the one holding row i.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatures {
    pub matrix: Matrix,
    /// Fold assignment used; `folds.fold_of[i]` is the provenance of every
    /// entry in row i (the fold whose held-out set contained the row).
    pub folds: FoldAssignment,
}

/// The fitted stack: refit bases, meta model, candidate ordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperLearnerModel {
    pub spec: SuperLearnerSpec,
    pub bases: Vec<TrainedModel>,
    pub meta: TrainedModel,
}

/// Super-learner document version written by [`SuperLearnerModel::to_json`].
pub const STACK_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct StackDocument {
    format_version: u32,
    #[serde(flatten)]
    model: SuperLearnerModel,
}

impl SuperLearnerModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&StackDocument {
            format_version: STACK_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("super-learner serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<SuperLearnerModel, LearnError> {
        let doc: StackDocument =
            serde_json::from_str(text).map_err(|e| LearnError::BadModelDocument {
                message: e.to_string(),
            })?;
        if doc.format_version != STACK_FORMAT_VERSION {
            return Err(LearnError::BadModelDocument {
                message: format!("unsupported format_version {}", doc.format_version),
            });
        }
        Ok(doc.model)
    }
}

/// Build the out-of-fold meta-feature matrix.
///
/// The k x |candidates| fold-training tasks are independent and run in
/// parallel; assembly is position-addressed, so scheduling cannot change
/// the result.
pub fn build_meta_features(
    x: &Matrix,
    y: &[u8],
    spec: &SuperLearnerSpec,
) -> Result<MetaFeatures, StackError> {
    spec.validate()?;
    let folds = kfold(y, spec.k, spec.folds_seed()).map_err(StackError::Folds)?;
    build_meta_features_with_folds(x, y, spec, folds)
}

/// Cross-fitting core with a caller-supplied fold assignment.
pub fn build_meta_features_with_folds(
    x: &Matrix,
    y: &[u8],
    spec: &SuperLearnerSpec,
    folds: FoldAssignment,
) -> Result<MetaFeatures, StackError> {
    spec.validate()?;
    let tasks: Vec<(u32, usize)> = (0..spec.k as u32)
        .flat_map(|f| (0..spec.candidates.len()).map(move |j| (f, j)))
        .collect();
    let results: Vec<Result<(u32, usize, Vec<usize>, Vec<f64>), StackError>> = tasks
        .par_iter()
        .map(|&(fold, candidate)| {
            let train_rows = folds.complement_rows(fold);
            let held_out = folds.fold_rows(fold);
            let x_train = x.select_rows(&train_rows);
            let y_train: Vec<u8> = train_rows.iter().map(|&i| y[i]).collect();
            let model = train(&x_train, &y_train, &spec.fold_model_spec(fold, candidate)).map_err(
                |source| StackError::FoldTask {
                    fold,
                    candidate,
                    source,
                },
            )?;
            let x_held = x.select_rows(&held_out);
            let scores = model
                .predict_proba(&x_held)
                .map_err(|source| StackError::FoldTask {
                    fold,
                    candidate,
                    source,
                })?;
            Ok((fold, candidate, held_out, scores))
        })
        .collect();

    let mut matrix = Matrix::zeros(x.rows(), spec.candidates.len());
    for result in results {
        let (_, candidate, held_out, scores) = result?;
        for (&row, &score) in held_out.iter().zip(&scores) {
            matrix.set(row, candidate, score);
        }
    }
    Ok(MetaFeatures { matrix, folds })
}

/// Refit every candidate on the full training set, in candidate order.
pub fn refit_candidates(
    x: &Matrix,
    y: &[u8],
    spec: &SuperLearnerSpec,
) -> Result<Vec<TrainedModel>, StackError> {
    spec.validate()?;
    (0..spec.candidates.len())
        .into_par_iter()
        .map(|j| train(x, y, &spec.refit_spec(j)).map_err(StackError::from))
        .collect()
}

/// Train the meta learner on the meta features and assemble the stack.
pub fn assemble_super_learner(
    spec: &SuperLearnerSpec,
    bases: Vec<TrainedModel>,
    meta_features: &MetaFeatures,
    y: &[u8],
) -> Result<SuperLearnerModel, StackError> {
    let meta = train(&meta_features.matrix, y, &spec.meta_spec())?;
    Ok(SuperLearnerModel {
        spec: spec.clone(),
        bases,
        meta,
    })
}

/// Full super-learner training: out-of-fold meta features, full-data base
/// refits, and the meta model, all from the spec's substreams.
pub fn train_super_learner(
    x: &Matrix,
    y: &[u8],
    spec: &SuperLearnerSpec,
) -> Result<SuperLearnerModel, StackError> {
    let meta_features = build_meta_features(x, y, spec)?;
    let bases = refit_candidates(x, y, spec)?;
    assemble_super_learner(spec, bases, &meta_features, y)
}

/// Score rows with each refit base in candidate order, then feed the
/// n x |candidates| matrix to the meta model.
pub fn predict_super(model: &SuperLearnerModel, x: &Matrix) -> Result<Vec<f64>, LearnError> {
    let mut base_scores = Matrix::zeros(x.rows(), model.bases.len());
    for (j, base) in model.bases.iter().enumerate() {
        let scores = base.predict_proba(x)?;
        for (i, s) in scores.into_iter().enumerate() {
            base_scores.set(i, j, s);
        }
    }
    model.meta.predict_proba(&base_scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{
        ForestParams, GbmParams, GlmParams, LearnerParams, MlpParams, ModelKind,
    };

    fn tiny_forest() -> LearnerSpec {
        LearnerSpec {
            params: LearnerParams::RandomForest(ForestParams {
                n_trees: 5,
                ..ForestParams::default()
            }),
            seed: 0,
        }
    }

    fn tiny_gbm() -> LearnerSpec {
        LearnerSpec {
            params: LearnerParams::Gbm(GbmParams {
                n_rounds: 10,
                max_depth: 2,
                min_samples_leaf: 1,
                ..GbmParams::default()
            }),
            seed: 0,
        }
    }

    fn tiny_mlp() -> LearnerSpec {
        LearnerSpec {
            params: LearnerParams::Mlp(MlpParams {
                hidden_layers: vec![4],
                batch_size: 4,
                epochs: 5,
                ..MlpParams::default()
            }),
            seed: 0,
        }
    }

    fn toy_data(n: usize) -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(
            (0..n)
                .map(|i| vec![(i % 7) as f64 / 7.0, ((i * 3) % 5) as f64 / 5.0])
                .collect(),
        );
        let y = (0..n).map(|i| u8::from((i % 7) >= 3)).collect();
        (x, y)
    }

    fn spec(meta: LearnerSpec, k: usize) -> SuperLearnerSpec {
        SuperLearnerSpec {
            candidates: vec![tiny_forest(), tiny_gbm(), tiny_mlp()],
            meta,
            k,
            seed: 77,
        }
    }

    #[test]
    fn meta_feature_width_is_candidate_count() {
        let (x, y) = toy_data(30);
        let mf = build_meta_features(&x, &y, &spec(tiny_mlp(), 3)).unwrap();
        assert_eq!(mf.matrix.cols(), 3);
        assert_eq!(mf.matrix.rows(), 30);
        for v in mf.matrix.data() {
            assert!((0.0..=1.0).contains(v));
        }
    }

    #[test]
    fn glm_candidates_are_rejected() {
        let mut s = spec(tiny_mlp(), 3);
        s.candidates.push(LearnerSpec {
            params: LearnerParams::Glm(GlmParams::default()),
            seed: 0,
        });
        assert!(matches!(s.validate(), Err(StackError::InvalidSpec { .. })));
    }

    #[test]
    fn leave_one_out_matches_explicit_holdout_loop() {
        let (x, y) = toy_data(12);
        let s = SuperLearnerSpec {
            candidates: vec![tiny_gbm()],
            meta: tiny_gbm(),
            k: 12,
            seed: 31,
        };
        let mf = build_meta_features(&x, &y, &s).unwrap();

        // Oracle: for every row, retrain on the other 11 rows with the same
        // derived seed and score the row directly.
        for i in 0..12 {
            let fold = mf.folds.fold_of[i];
            let train_rows: Vec<usize> = (0..12).filter(|&r| mf.folds.fold_of[r] != fold).collect();
            assert_eq!(train_rows.len(), 11);
            let x_train = x.select_rows(&train_rows);
            let y_train: Vec<u8> = train_rows.iter().map(|&r| y[r]).collect();
            let model = train(&x_train, &y_train, &s.fold_model_spec(fold, 0)).unwrap();
            let expect = model.predict_proba(&x.select_rows(&[i])).unwrap()[0];
            assert_eq!(mf.matrix.get(i, 0), expect, "row {i}");
        }
    }

    #[test]
    fn two_fold_single_candidate_blocks_come_from_opposite_halves() {
        let (x, y) = toy_data(20);
        let s = SuperLearnerSpec {
            candidates: vec![tiny_forest()],
            meta: tiny_gbm(),
            k: 2,
            seed: 5,
        };
        let mf = build_meta_features(&x, &y, &s).unwrap();
        for fold in 0..2u32 {
            let rows = mf.folds.fold_rows(fold);
            let train_rows = mf.folds.complement_rows(fold);
            let x_train = x.select_rows(&train_rows);
            let y_train: Vec<u8> = train_rows.iter().map(|&r| y[r]).collect();
            let model = train(&x_train, &y_train, &s.fold_model_spec(fold, 0)).unwrap();
            let scores = model.predict_proba(&x.select_rows(&rows)).unwrap();
            for (&row, &score) in rows.iter().zip(&scores) {
                assert_eq!(mf.matrix.get(row, 0), score);
            }
        }
    }

    #[test]
    fn no_peek_row_perturbation_cannot_reach_its_own_fold_model() {
        let (x, mut y) = toy_data(24);
        let s = spec(tiny_gbm(), 4);
        // Hold the fold split fixed while perturbing one row.
        let folds = crate::preprocess::kfold(&y, s.k, s.folds_seed()).unwrap();
        let before = build_meta_features_with_folds(&x, &y, &s, folds.clone()).unwrap();
        let target = 7usize;
        let fold = folds.fold_of[target];
        let fold_rows = folds.fold_rows(fold);

        // Flip the row's label. Labels only enter training, and the models
        // scoring this fold never trained on it, so every entry of the
        // whole fold stays put, including the perturbed row's own.
        y[target] ^= 1;
        let after_label = build_meta_features_with_folds(&x, &y, &s, folds.clone()).unwrap();
        y[target] ^= 1;
        for &i in &fold_rows {
            for j in 0..3 {
                assert_eq!(
                    before.matrix.get(i, j),
                    after_label.matrix.get(i, j),
                    "label flip moved row {i}, candidate {j}"
                );
            }
        }

        // Mutate the row's features. The fold model is fitted without the
        // row, so the other held-out rows of the same fold cannot move;
        // only the mutated row's own score may change (its features feed
        // the prediction).
        let mut rows: Vec<Vec<f64>> = (0..24).map(|i| x.row(i).to_vec()).collect();
        rows[target] = vec![123.0, -55.0];
        let x_mut = Matrix::from_rows(rows);
        let after_features = build_meta_features_with_folds(&x_mut, &y, &s, folds).unwrap();
        for &i in &fold_rows {
            if i == target {
                continue;
            }
            for j in 0..3 {
                assert_eq!(
                    before.matrix.get(i, j),
                    after_features.matrix.get(i, j),
                    "feature change moved row {i}, candidate {j}"
                );
            }
        }
    }

    #[test]
    fn meta_features_are_identical_for_sl1_and_sl2() {
        let (x, y) = toy_data(25);
        let sl1 = spec(tiny_mlp(), 5);
        let sl2 = spec(tiny_gbm(), 5);
        let a = build_meta_features(&x, &y, &sl1).unwrap();
        let b = build_meta_features(&x, &y, &sl2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_round_meta_gbm_predicts_base_rate_regardless_of_bases() {
        let (x, y) = toy_data(21);
        let base_rate = y.iter().filter(|&&v| v == 1).count() as f64 / 21.0;
        let mut s = spec(tiny_gbm(), 3);
        s.meta = LearnerSpec {
            params: LearnerParams::Gbm(GbmParams {
                n_rounds: 0,
                ..GbmParams::default()
            }),
            seed: 0,
        };
        let model = train_super_learner(&x, &y, &s).unwrap();
        let probs = predict_super(&model, &x).unwrap();
        for p in probs {
            assert!((p - base_rate).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_bases_propagate_to_a_constant_prediction() {
        let (x, y) = toy_data(20);
        let s = spec(tiny_gbm(), 4);
        let mut model = train_super_learner(&x, &y, &s).unwrap();
        // Replace every base with a single-leaf forest emitting 0.7.
        for base in &mut model.bases {
            if let ModelKind::Forest(f) = &mut base.model {
                f.trees = vec![crate::learners::tree::Tree::leaf(0.7)];
                f.tree_seeds = vec![0];
            } else {
                base.model = ModelKind::Forest(crate::learners::ForestModel {
                    trees: vec![crate::learners::tree::Tree::leaf(0.7)],
                    tree_seeds: vec![0],
                    mtry_used: 1,
                    input_width: base.input_width(),
                });
            }
        }
        let probs = predict_super(&model, &x).unwrap();
        let first = probs[0];
        for p in probs {
            assert_eq!(p, first);
        }
    }

    #[test]
    fn training_is_deterministic_and_serializes_identically() {
        let (x, y) = toy_data(26);
        let s = spec(tiny_gbm(), 3);
        let a = train_super_learner(&x, &y, &s).unwrap();
        let b = train_super_learner(&x, &y, &s).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn shared_path_equals_self_contained_training() {
        let (x, y) = toy_data(24);
        let sl1 = spec(tiny_mlp(), 3);
        let sl2 = spec(tiny_gbm(), 3);
        // Shared orchestration: one meta-feature build, one refit pass.
        let mf = build_meta_features(&x, &y, &sl1).unwrap();
        let bases = refit_candidates(&x, &y, &sl1).unwrap();
        let fast1 = assemble_super_learner(&sl1, bases.clone(), &mf, &y).unwrap();
        let fast2 = assemble_super_learner(&sl2, bases, &mf, &y).unwrap();
        // Self-contained training must produce the identical models.
        let slow1 = train_super_learner(&x, &y, &sl1).unwrap();
        let slow2 = train_super_learner(&x, &y, &sl2).unwrap();
        assert_eq!(fast1.to_json(), slow1.to_json());
        assert_eq!(fast2.to_json(), slow2.to_json());
    }

    #[test]
    fn round_trip_predicts_identically() {
        let (x, y) = toy_data(22);
        let s = spec(tiny_mlp(), 3);
        let model = train_super_learner(&x, &y, &s).unwrap();
        let restored = SuperLearnerModel::from_json(&model.to_json()).unwrap();
        assert_eq!(
            predict_super(&model, &x).unwrap(),
            predict_super(&restored, &x).unwrap()
        );
    }

    #[test]
    fn row_order_is_preserved_through_both_stages() {
        let (x, y) = toy_data(20);
        let s = spec(tiny_gbm(), 4);
        let model = train_super_learner(&x, &y, &s).unwrap();
        let full = predict_super(&model, &x).unwrap();
        let reversed_rows: Vec<usize> = (0..20).rev().collect();
        let reversed = predict_super(&model, &x.select_rows(&reversed_rows)).unwrap();
        for i in 0..20 {
            assert_eq!(full[i], reversed[19 - i]);
        }
    }
}
