//! Feature encoding: z-scores for numeric columns, full one-hot for
//! categorical columns, pass-through for binary columns.
//!
//! The encoder is fitted on training rows only and never sees test values,
//! so its parameters cannot leak the test set.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PreprocessError;
use crate::dataset::{ColumnData, FeatureKind, TabularDataset};
use crate::matrix::Matrix;

/// Fitted per-column encoding parameters and the output layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    columns: Vec<FittedColumn>,
    width: usize,
    /// Digest of (source file digest, training row ids).
    pub fitted_on: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum FittedColumn {
    Numeric {
        name: String,
        mean: f64,
        /// Sample standard deviation; 0 marks a constant column whose
        /// encoded output is identically 0.
        sd: f64,
    },
    Binary {
        name: String,
    },
    Categorical {
        name: String,
        /// Training levels in sorted order; one output slot per level.
        levels: Vec<String>,
    },
}

impl FittedColumn {
    fn name(&self) -> &str {
        match self {
            FittedColumn::Numeric { name, .. }
            | FittedColumn::Binary { name }
            | FittedColumn::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            FittedColumn::Categorical { levels, .. } => levels.len(),
            _ => 1,
        }
    }
}

impl EncoderState {
    /// Total encoded width.
    pub fn width(&self) -> usize {
        self.width
    }

    /// (column name, first output slot, slot count) per source column.
    pub fn layout(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::with_capacity(self.columns.len());
        let mut offset = 0;
        for c in &self.columns {
            out.push((c.name().to_string(), offset, c.width()));
            offset += c.width();
        }
        out
    }
}

/// Dense design matrix with its aligned labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub matrix: Matrix,
    pub labels: Vec<u8>,
    /// Cells whose categorical level was unseen at fit time (each encodes
    /// as an all-zero block).
    pub unseen_levels: u64,
}

impl EncodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn width(&self) -> usize {
        self.matrix.cols()
    }
}

fn numeric_view<'a>(data: &'a ColumnData, name: &str) -> Result<&'a [f64], PreprocessError> {
    match data {
        ColumnData::Numeric { values, .. } => Ok(values),
        _ => Err(PreprocessError::SchemaMismatch {
            message: format!("column {name} is not numeric"),
        }),
    }
}

/// Fit encoding parameters on the given training rows.
pub fn fit_encoder(
    dataset: &TabularDataset,
    train_rows: &[usize],
) -> Result<EncoderState, PreprocessError> {
    if train_rows.is_empty() {
        return Err(PreprocessError::EmptyTrainingSet);
    }
    let mut columns = Vec::with_capacity(dataset.features.len());
    for col in &dataset.features {
        let name = col.schema.name.clone();
        let fitted = match (&col.schema.kind, &col.data) {
            (FeatureKind::Numeric, data) => {
                let values = numeric_view(data, &name)?;
                let n = train_rows.len() as f64;
                let mean = train_rows.iter().map(|&i| values[i]).sum::<f64>() / n;
                let sd = if train_rows.len() < 2 {
                    0.0
                } else {
                    let ss = train_rows
                        .iter()
                        .map(|&i| (values[i] - mean).powi(2))
                        .sum::<f64>();
                    (ss / (n - 1.0)).sqrt()
                };
                FittedColumn::Numeric { name, mean, sd }
            }
            (FeatureKind::Binary, ColumnData::Binary { .. }) => FittedColumn::Binary { name },
            (FeatureKind::Categorical, ColumnData::Categorical { levels, codes, .. }) => {
                let mut present = vec![false; levels.len()];
                for &i in train_rows {
                    present[codes[i] as usize] = true;
                }
                // Dataset levels are sorted, so the filtered list stays sorted.
                let train_levels: Vec<String> = levels
                    .iter()
                    .zip(&present)
                    .filter(|(_, &p)| p)
                    .map(|(l, _)| l.clone())
                    .collect();
                FittedColumn::Categorical {
                    name,
                    levels: train_levels,
                }
            }
            _ => {
                return Err(PreprocessError::SchemaMismatch {
                    message: format!("column {name}: declared kind does not match storage"),
                })
            }
        };
        columns.push(fitted);
    }
    let width = columns.iter().map(FittedColumn::width).sum();

    let mut hasher = Sha256::new();
    hasher.update(dataset.provenance.sha256.as_bytes());
    for &i in train_rows {
        hasher.update((i as u64).to_le_bytes());
    }
    let fitted_on = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();

    Ok(EncoderState {
        columns,
        width,
        fitted_on,
    })
}

impl EncoderState {
    /// Encode the given rows of a dataset into a dense matrix.
    ///
    /// Numeric columns become z-scores (constant columns encode as 0),
    /// categorical levels hit their one-hot slot, unseen levels leave an
    /// all-zero block and are tallied. Row order is preserved.
    pub fn encode(
        &self,
        dataset: &TabularDataset,
        rows: &[usize],
    ) -> Result<EncodedMatrix, PreprocessError> {
        if dataset.features.len() != self.columns.len() {
            return Err(PreprocessError::SchemaMismatch {
                message: format!(
                    "encoder fitted on {} columns, dataset has {}",
                    self.columns.len(),
                    dataset.features.len()
                ),
            });
        }
        let mut matrix = Matrix::zeros(rows.len(), self.width);
        let mut unseen_levels = 0u64;
        let mut offset = 0usize;
        for (col, fitted) in dataset.features.iter().zip(&self.columns) {
            if col.schema.name != fitted.name() {
                return Err(PreprocessError::SchemaMismatch {
                    message: format!(
                        "column order differs: expected {:?}, found {:?}",
                        fitted.name(),
                        col.schema.name
                    ),
                });
            }
            match (fitted, &col.data) {
                (FittedColumn::Numeric { mean, sd, .. }, data) => {
                    let values = numeric_view(data, fitted.name())?;
                    for (r, &i) in rows.iter().enumerate() {
                        let z = if *sd > 0.0 {
                            (values[i] - mean) / sd
                        } else {
                            0.0
                        };
                        matrix.set(r, offset, z);
                    }
                }
                (FittedColumn::Binary { .. }, ColumnData::Binary { values, .. }) => {
                    for (r, &i) in rows.iter().enumerate() {
                        matrix.set(r, offset, f64::from(values[i]));
                    }
                }
                (
                    FittedColumn::Categorical { levels, .. },
                    ColumnData::Categorical {
                        levels: data_levels,
                        codes,
                        ..
                    },
                ) => {
                    // Map this dataset's level codes onto the fitted slots.
                    let slot_of_code: Vec<Option<usize>> = data_levels
                        .iter()
                        .map(|l| levels.binary_search(l).ok())
                        .collect();
                    for (r, &i) in rows.iter().enumerate() {
                        match slot_of_code[codes[i] as usize] {
                            Some(slot) => matrix.set(r, offset + slot, 1.0),
                            None => unseen_levels += 1,
                        }
                    }
                }
                _ => {
                    return Err(PreprocessError::SchemaMismatch {
                        message: format!(
                            "column {}: storage kind changed since fitting",
                            fitted.name()
                        ),
                    })
                }
            }
            offset += fitted.width();
        }
        let labels = rows.iter().map(|&i| dataset.labels[i]).collect();
        Ok(EncodedMatrix {
            matrix,
            labels,
            unseen_levels,
        })
    }
}
