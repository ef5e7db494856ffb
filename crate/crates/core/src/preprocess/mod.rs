//! Class balancing, stratified splitting, fold assignment, and feature
//! encoding.
//!
//! Pipeline order is fixed: under-sample the full dataset first, then
//! split, then fit the encoder on training rows only.

mod encode;

pub use encode::{fit_encoder, EncodedMatrix, EncoderState};

use std::fmt;

use crate::rng::Rng;

/// Errors from preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessError {
    SingleClassInput,
    InvalidFraction {
        value: f64,
    },
    DegenerateSplit {
        class: u8,
        train: usize,
        test: usize,
    },
    EmptyTrainingSet,
    TooFewRowsPerClass {
        class: u8,
        rows: usize,
        k: usize,
    },
    InvalidFoldCount {
        k: usize,
    },
    SchemaMismatch {
        message: String,
    },
}

impl fmt::Display for PreprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessError::SingleClassInput => {
                write!(f, "both classes must be present")
            }
            PreprocessError::InvalidFraction { value } => {
                write!(f, "test fraction must be in (0, 1), got {value}")
            }
            PreprocessError::DegenerateSplit { class, train, test } => write!(
                f,
                "class {class} would get {train} train / {test} test rows"
            ),
            PreprocessError::EmptyTrainingSet => write!(f, "training rows are empty"),
            PreprocessError::TooFewRowsPerClass { class, rows, k } => {
                write!(f, "class {class} has {rows} rows, fewer than k = {k}")
            }
            PreprocessError::InvalidFoldCount { k } => {
                write!(f, "fold count must be >= 2, got {k}")
            }
            PreprocessError::SchemaMismatch { message } => write!(f, "schema mismatch: {message}"),
        }
    }
}

impl std::error::Error for PreprocessError {}

/// Seeded random under-sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
}

/// Balance classes by random under-sampling of the majority class.
///
/// Keeps every minority-class row plus a uniformly random, seeded subset of
/// the majority class of equal size. Returns retained indices in ascending
/// order; the retained count is exactly twice the minority size.
pub fn undersample(labels: &[u8], cfg: &SamplerConfig) -> Result<Vec<usize>, PreprocessError> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(PreprocessError::SingleClassInput);
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (pos, neg)
    } else {
        (neg, pos)
    };
    let mut rng = Rng::new(cfg.seed);
    let picked = rng.sample_distinct(majority.len(), minority.len());
    let mut retained: Vec<usize> = minority;
    retained.extend(picked.into_iter().map(|k| majority[k]));
    retained.sort_unstable();
    Ok(retained)
}

/// A stratified train/test split over row positions `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub seed: u64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Stratified split; per-class test counts stay within one row of
/// `test_fraction * class_size` and the total test size is
/// `round(test_fraction * n)` exactly.
///
/// The leftover row after per-class flooring goes to the class with the
/// larger fractional quota, ties broken by the seeded stream.
pub fn stratified_split(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan, PreprocessError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::InvalidFraction {
            value: test_fraction,
        });
    }
    let by_class: [Vec<usize>; 2] = [
        (0..labels.len()).filter(|&i| labels[i] == 0).collect(),
        (0..labels.len()).filter(|&i| labels[i] == 1).collect(),
    ];
    if by_class[0].is_empty() || by_class[1].is_empty() {
        return Err(PreprocessError::SingleClassInput);
    }

    let total_test = (test_fraction * labels.len() as f64).round() as usize;
    let quotas: [f64; 2] = [
        test_fraction * by_class[0].len() as f64,
        test_fraction * by_class[1].len() as f64,
    ];
    let mut test_counts: [usize; 2] = [quotas[0].floor() as usize, quotas[1].floor() as usize];
    let mut leftover = total_test.saturating_sub(test_counts[0] + test_counts[1]);

    let mut rng = Rng::new(seed);
    // Hand out leftovers by largest fractional remainder; a seeded coin
    // settles exact ties so balanced classes share them fairly.
    let mut class_order: [usize; 2] = [0, 1];
    let rem0 = quotas[0] - quotas[0].floor();
    let rem1 = quotas[1] - quotas[1].floor();
    if rem1 > rem0 || (rem1 == rem0 && rng.gen_range(2) == 1) {
        class_order = [1, 0];
    }
    for &c in &class_order {
        if leftover == 0 {
            break;
        }
        test_counts[c] += 1;
        leftover -= 1;
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (c, indices) in by_class.iter().enumerate() {
        let n_test = test_counts[c];
        let n_train = indices.len() - n_test.min(indices.len());
        if n_test == 0 || n_train == 0 {
            return Err(PreprocessError::DegenerateSplit {
                class: c as u8,
                train: n_train,
                test: n_test,
            });
        }
        let mut shuffled = indices.clone();
        rng.shuffle(&mut shuffled);
        test_idx.extend_from_slice(&shuffled[..n_test]);
        train_idx.extend_from_slice(&shuffled[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok(SplitPlan {
        test_fraction,
        seed,
        train_idx,
        test_idx,
    })
}

/// Stratified k-fold assignment over row positions `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<u32>,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn fold_rows(&self, fold: u32) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] == fold)
            .collect()
    }

    pub fn complement_rows(&self, fold: u32) -> Vec<usize> {
        (0..self.fold_of.len())
            .filter(|&i| self.fold_of[i] != fold)
            .collect()
    }
}

/// Stratified k folds: within each class, shuffled rows are dealt
/// round-robin, so per-fold class counts differ by at most one. The deal
/// cursor continues across classes, which keeps total fold sizes within
/// one of each other and lets k reach n_rows (leave-one-out).
pub fn kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldAssignment, PreprocessError> {
    if k < 2 {
        return Err(PreprocessError::InvalidFoldCount { k });
    }
    if labels.len() < k {
        let minority = {
            let pos = labels.iter().filter(|&&y| y == 1).count();
            u8::from(pos * 2 < labels.len())
        };
        let rows = labels.iter().filter(|&&y| y == minority).count();
        return Err(PreprocessError::TooFewRowsPerClass {
            class: minority,
            rows,
            k,
        });
    }
    let mut rng = Rng::new(seed);
    let mut fold_of = vec![0u32; labels.len()];
    let mut cursor = 0usize;
    for class in [0u8, 1u8] {
        let mut indices: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut indices);
        for &row in &indices {
            fold_of[row] = (cursor % k) as u32;
            cursor += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of, seed })
}
