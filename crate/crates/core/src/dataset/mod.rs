//! Dataset ingestion: typed CSV loading, binary label mapping, and
//! Table-style summaries for the three benchmark scenarios.

mod load;
mod schema;

pub use load::load_csv;
pub use schema::{
    builtin_schema, reference_counts, ColumnSpec, ExpectedCounts, LabelMode, LabelSpec,
    ReferenceCounts, ScenarioId, SchemaConfig,
};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// What a feature column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Numeric,
    Categorical,
    Binary,
}

/// How a column participates in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Feature,
    Label,
    Dropped,
}

/// Resolved schema entry for one column of a loaded dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: FeatureKind,
    pub role: ColumnRole,
}

/// Reserved level that missing categorical cells map to.
pub const MISSING_LEVEL: &str = "__missing__";

/// Typed storage for one feature column. Missing cells are already
/// substituted (numeric/binary impute 0, categorical the reserved level)
/// and counted.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric {
        values: Vec<f64>,
        missing: u64,
    },
    Binary {
        values: Vec<u8>,
        missing: u64,
    },
    Categorical {
        /// Sorted distinct levels observed in the file.
        levels: Vec<String>,
        /// Per-row index into `levels`.
        codes: Vec<u32>,
        missing: u64,
    },
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric { values, .. } => values.len(),
            ColumnData::Binary { values, .. } => values.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> u64 {
        match self {
            ColumnData::Numeric { missing, .. }
            | ColumnData::Binary { missing, .. }
            | ColumnData::Categorical { missing, .. } => *missing,
        }
    }
}

/// One feature column with its schema entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub schema: ColumnSchema,
    pub data: ColumnData,
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub path: String,
    /// SHA-256 of the raw file bytes, hex encoded.
    pub sha256: String,
}

/// A loaded, typed, immutable table for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    /// Final schema of every column in the file, including label and
    /// dropped columns, in file order.
    pub schema: Vec<ColumnSchema>,
    /// Feature columns only (role = feature), in schema order.
    pub features: Vec<FeatureColumn>,
    /// Binary target, one entry per row.
    pub labels: Vec<u8>,
    pub n_rows: usize,
    pub provenance: Provenance,
}

impl TabularDataset {
    pub fn n_features(&self) -> usize {
        self.features.len()
    }
}

/// Row counts, class counts, and per-column tallies; the printable
/// description of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n_rows: usize,
    pub n_features: usize,
    pub count_y0: u64,
    pub count_y1: u64,
    /// Missing-cell counts per feature column that had any.
    pub missing_by_column: BTreeMap<String, u64>,
    /// Distinct level counts per categorical feature column.
    pub categorical_levels: BTreeMap<String, usize>,
    /// Columns the schema or the level-count guard excluded.
    pub dropped_columns: Vec<String>,
}

/// Errors from dataset ingestion.
#[derive(Debug)]
pub enum DataError {
    MissingFile {
        path: String,
    },
    Io {
        path: String,
        source: std::io::Error,
    },
    Csv {
        path: String,
        source: csv::Error,
    },
    HeaderMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    LabelParseFailure {
        row: usize,
        token: String,
    },
    UnmappedToken {
        row: usize,
        token: String,
    },
    EmptySampleWithoutOverrides,
    SchemaError {
        message: String,
    },
    CountMismatch {
        expected: String,
        found: String,
    },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::MissingFile { path } => write!(f, "data file not found: {path}"),
            DataError::Io { path, source } => write!(f, "io error reading {path}: {source}"),
            DataError::Csv { path, source } => write!(f, "csv error in {path}: {source}"),
            DataError::HeaderMismatch {
                missing,
                unexpected,
            } => write!(
                f,
                "header mismatch: missing columns {missing:?}, unexpected columns {unexpected:?}"
            ),
            DataError::RaggedRow {
                row,
                expected,
                found,
            } => {
                write!(f, "row {row}: expected {expected} fields, found {found}")
            }
            DataError::LabelParseFailure { row, token } => {
                write!(
                    f,
                    "row {row}: label token {token:?} does not resolve to 0 or 1"
                )
            }
            DataError::UnmappedToken { row, token } => {
                write!(
                    f,
                    "row {row}: token {token:?} not covered by the label spec"
                )
            }
            DataError::EmptySampleWithoutOverrides => {
                write!(
                    f,
                    "cannot infer column kinds from an empty sample without overrides"
                )
            }
            DataError::SchemaError { message } => write!(f, "schema error: {message}"),
            DataError::CountMismatch { expected, found } => {
                write!(
                    f,
                    "dataset counts mismatch: expected {expected}, found {found}"
                )
            }
        }
    }
}

impl std::error::Error for DataError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DataError::Io { source, .. } => Some(source),
            DataError::Csv { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Tokens treated as missing cells, compared case-insensitively.
const MISSING_TOKENS: [&str; 5] = ["", "?", "na", "nan", "null"];

pub(crate) fn is_missing_token(token: &str) -> bool {
    let t = token.trim();
    t.is_empty() || MISSING_TOKENS.iter().any(|m| t.eq_ignore_ascii_case(m))
}

pub(crate) fn parse_numeric(token: &str) -> Option<f64> {
    token.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

pub(crate) fn parse_binary(token: &str) -> Option<u8> {
    let v = parse_numeric(token)?;
    if v == 0.0 {
        Some(0)
    } else if v == 1.0 {
        Some(1)
    } else {
        None
    }
}

/// Map a raw label token column to {0,1} under `spec`.
pub fn binarize_labels(tokens: &[String], spec: &LabelSpec) -> Result<Vec<u8>, DataError> {
    let mut labels = Vec::with_capacity(tokens.len());
    for (row, token) in tokens.iter().enumerate() {
        let t = token.trim();
        let y = match spec.mode {
            LabelMode::Explicit => {
                if spec.positive_tokens.contains(t) {
                    1
                } else if spec.negative_tokens.contains(t) {
                    0
                } else {
                    return Err(DataError::UnmappedToken {
                        row,
                        token: token.clone(),
                    });
                }
            }
            LabelMode::Complement => {
                if spec.negative_tokens.contains(t) {
                    0
                } else {
                    1
                }
            }
        };
        labels.push(y);
    }
    Ok(labels)
}

/// Decide the kind of one column from its observed tokens.
///
/// Missing tokens are ignored. All-numeric wins, then all-{0,1} binary,
/// otherwise categorical. A column with no observed tokens is numeric
/// (constant zero after imputation).
pub(crate) fn classify_tokens<'a, I: IntoIterator<Item = &'a str>>(tokens: I) -> FeatureKind {
    let mut saw_any = false;
    let mut all_numeric = true;
    let mut all_binary = true;
    for t in tokens {
        if is_missing_token(t) {
            continue;
        }
        saw_any = true;
        match parse_numeric(t) {
            Some(v) => {
                if v != 0.0 && v != 1.0 {
                    all_binary = false;
                }
            }
            None => {
                all_numeric = false;
                all_binary = false;
                break;
            }
        }
    }
    if !saw_any || (all_numeric && !all_binary) {
        FeatureKind::Numeric
    } else if all_binary {
        FeatureKind::Binary
    } else {
        FeatureKind::Categorical
    }
}

/// Infer a schema from sample rows; `overrides` win per column name.
///
/// Columns are classified numeric if every observed token parses as a
/// finite number, binary if every token is 0 or 1, and categorical
/// otherwise. All inferred columns get role = feature.
pub fn infer_feature_kinds(
    names: &[String],
    sample_rows: &[Vec<String>],
    overrides: &BTreeMap<String, FeatureKind>,
) -> Result<Vec<ColumnSchema>, DataError> {
    if sample_rows.is_empty() && names.iter().any(|n| !overrides.contains_key(n)) {
        return Err(DataError::EmptySampleWithoutOverrides);
    }
    let mut out = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let kind = match overrides.get(name) {
            Some(&k) => k,
            None => classify_tokens(
                sample_rows
                    .iter()
                    .map(|row| row.get(j).map(String::as_str).unwrap_or("")),
            ),
        };
        out.push(ColumnSchema {
            name: name.clone(),
            kind,
            role: ColumnRole::Feature,
        });
    }
    Ok(out)
}

/// Tally a loaded dataset into a printable summary.
pub fn summarize(dataset: &TabularDataset) -> DatasetSummary {
    let count_y1 = dataset.labels.iter().filter(|&&y| y == 1).count() as u64;
    let count_y0 = dataset.labels.len() as u64 - count_y1;
    let mut missing_by_column = BTreeMap::new();
    let mut categorical_levels = BTreeMap::new();
    for col in &dataset.features {
        let missing = col.data.missing_count();
        if missing > 0 {
            missing_by_column.insert(col.schema.name.clone(), missing);
        }
        if let ColumnData::Categorical { levels, .. } = &col.data {
            categorical_levels.insert(col.schema.name.clone(), levels.len());
        }
    }
    let dropped_columns = dataset
        .schema
        .iter()
        .filter(|c| c.role == ColumnRole::Dropped)
        .map(|c| c.name.clone())
        .collect();
    DatasetSummary {
        n_rows: dataset.n_rows,
        n_features: dataset.n_features(),
        count_y0,
        count_y1,
        missing_by_column,
        categorical_levels,
        dropped_columns,
    }
}
