//! CSV loading against a scenario schema.
//!
//! Loading is pure per (file bytes, schema): the same inputs always produce
//! the same dataset, including the provenance digest.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::schema::SchemaConfig;
use super::{
    binarize_labels, is_missing_token, parse_binary, parse_numeric, ColumnData, ColumnRole,
    ColumnSchema, DataError, FeatureColumn, FeatureKind, Provenance, TabularDataset, MISSING_LEVEL,
};

/// Column storage being accumulated during the row pass.
enum Builder {
    Numeric {
        values: Vec<f64>,
        missing: u64,
    },
    Binary {
        values: Vec<u8>,
        missing: u64,
    },
    Categorical {
        slot_of: HashMap<String, u32>,
        levels: Vec<String>,
        codes: Vec<u32>,
        missing: u64,
    },
    Label {
        tokens: Vec<String>,
    },
    Skip,
}

impl Builder {
    fn new(kind: FeatureKind, role: ColumnRole) -> Builder {
        match role {
            ColumnRole::Dropped => Builder::Skip,
            ColumnRole::Label => Builder::Label { tokens: Vec::new() },
            ColumnRole::Feature => match kind {
                FeatureKind::Numeric => Builder::Numeric {
                    values: Vec::new(),
                    missing: 0,
                },
                FeatureKind::Binary => Builder::Binary {
                    values: Vec::new(),
                    missing: 0,
                },
                FeatureKind::Categorical => Builder::Categorical {
                    slot_of: HashMap::new(),
                    levels: Vec::new(),
                    codes: Vec::new(),
                    missing: 0,
                },
            },
        }
    }

    fn push(&mut self, token: &str) {
        match self {
            Builder::Numeric { values, missing } => match parse_numeric(token) {
                Some(v) => values.push(v),
                None => {
                    *missing += 1;
                    values.push(0.0);
                }
            },
            Builder::Binary { values, missing } => match parse_binary(token) {
                Some(v) => values.push(v),
                None => {
                    *missing += 1;
                    values.push(0);
                }
            },
            Builder::Categorical {
                slot_of,
                levels,
                codes,
                missing,
            } => {
                let t = token.trim();
                let effective = if is_missing_token(t) {
                    *missing += 1;
                    MISSING_LEVEL
                } else {
                    t
                };
                let next = levels.len() as u32;
                let code = *slot_of.entry(effective.to_string()).or_insert_with(|| {
                    levels.push(effective.to_string());
                    next
                });
                codes.push(code);
            }
            Builder::Label { tokens } => tokens.push(token.trim().to_string()),
            Builder::Skip => {}
        }
    }

    /// Finish a feature column; categorical levels are re-sorted so the
    /// stored order never depends on row order.
    fn finish(self) -> Option<ColumnData> {
        match self {
            Builder::Numeric { values, missing } => Some(ColumnData::Numeric { values, missing }),
            Builder::Binary { values, missing } => Some(ColumnData::Binary { values, missing }),
            Builder::Categorical {
                mut levels,
                codes,
                missing,
                ..
            } => {
                let mut order: Vec<u32> = (0..levels.len() as u32).collect();
                order.sort_by(|&a, &b| levels[a as usize].cmp(&levels[b as usize]));
                let mut rank = vec![0u32; levels.len()];
                for (new_code, &old_code) in order.iter().enumerate() {
                    rank[old_code as usize] = new_code as u32;
                }
                let codes = codes.iter().map(|&c| rank[c as usize]).collect();
                levels.sort();
                Some(ColumnData::Categorical {
                    levels,
                    codes,
                    missing,
                })
            }
            Builder::Label { .. } | Builder::Skip => None,
        }
    }
}

fn read_file_bytes(path: &Path) -> Result<Vec<u8>, DataError> {
    if !path.exists() {
        return Err(DataError::MissingFile {
            path: path.display().to_string(),
        });
    }
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    // Strip a UTF-8 BOM if present; some published files carry one.
    let bytes = bytes.strip_prefix(&[0xef, 0xbb, 0xbf][..]).unwrap_or(bytes);
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes)
}

fn field(record: &csv::ByteRecord, i: usize) -> String {
    String::from_utf8_lossy(record.get(i).unwrap_or(b"")).into_owned()
}

/// Load one scenario CSV into a typed table.
///
/// Rows whose label token does not resolve are a hard error; unparseable
/// tokens in numeric/binary feature columns become missing cells (imputed
/// and tallied). Categorical feature columns whose level count exceeds
/// `max_level_fraction * n_rows` are demoted to dropped.
pub fn load_csv(path: &Path, config: &SchemaConfig) -> Result<TabularDataset, DataError> {
    config.validate()?;
    let bytes = read_file_bytes(path)?;
    let sha256 = hex(&Sha256::digest(&bytes));

    let wrap_csv = |source: csv::Error| DataError::Csv {
        path: path.display().to_string(),
        source,
    };

    // Resolve the file's column order against the schema.
    let mut names: Vec<String> = Vec::new();
    let mut specs: Vec<Option<(FeatureKind, ColumnRole)>> = Vec::new();
    let mut first_data_record = 0usize;
    if config.header {
        let mut reader = csv_reader(&bytes);
        let mut header = csv::ByteRecord::new();
        if reader.read_byte_record(&mut header).map_err(wrap_csv)? {
            names = (0..header.len())
                .map(|i| field(&header, i).trim().to_string())
                .collect();
        }
        first_data_record = 1;
        let mut unexpected = Vec::new();
        for name in &names {
            match config.columns.iter().find(|c| &c.name == name) {
                Some(c) => specs.push(Some((c.kind, c.role))),
                None if config.infer_unlisted => specs.push(None),
                None => {
                    unexpected.push(name.clone());
                    specs.push(None);
                }
            }
        }
        let missing: Vec<String> = config
            .columns
            .iter()
            .filter(|c| !names.contains(&c.name))
            .map(|c| c.name.clone())
            .collect();
        if !missing.is_empty() || !unexpected.is_empty() {
            return Err(DataError::HeaderMismatch {
                missing,
                unexpected,
            });
        }
    } else {
        names = config.columns.iter().map(|c| c.name.clone()).collect();
        specs = config
            .columns
            .iter()
            .map(|c| Some((c.kind, c.role)))
            .collect();
    }
    let width = names.len();

    // Infer kinds for unlisted columns, if any, with one extra pass.
    let inferred: Vec<usize> = (0..width).filter(|&i| specs[i].is_none()).collect();
    if !inferred.is_empty() {
        struct InferState {
            saw_any: bool,
            all_numeric: bool,
            all_binary: bool,
        }
        let mut states: Vec<InferState> = inferred
            .iter()
            .map(|_| InferState {
                saw_any: false,
                all_numeric: true,
                all_binary: true,
            })
            .collect();
        let mut reader = csv_reader(&bytes);
        let mut record = csv::ByteRecord::new();
        let mut rec_no = 0usize;
        while reader.read_byte_record(&mut record).map_err(wrap_csv)? {
            if rec_no < first_data_record {
                rec_no += 1;
                continue;
            }
            rec_no += 1;
            for (k, &i) in inferred.iter().enumerate() {
                let token = field(&record, i);
                let t = token.trim();
                if is_missing_token(t) {
                    continue;
                }
                let state = &mut states[k];
                state.saw_any = true;
                match parse_numeric(t) {
                    Some(v) => {
                        if v != 0.0 && v != 1.0 {
                            state.all_binary = false;
                        }
                    }
                    None => {
                        state.all_numeric = false;
                        state.all_binary = false;
                    }
                }
            }
        }
        for (k, &i) in inferred.iter().enumerate() {
            let s = &states[k];
            let kind = if !s.saw_any || (s.all_numeric && !s.all_binary) {
                FeatureKind::Numeric
            } else if s.all_binary {
                FeatureKind::Binary
            } else {
                FeatureKind::Categorical
            };
            specs[i] = Some((kind, ColumnRole::Feature));
        }
    }

    // Main pass: build typed columns.
    let mut builders: Vec<Builder> = specs
        .iter()
        .map(|s| {
            let (kind, role) = s.expect("all specs resolved");
            Builder::new(kind, role)
        })
        .collect();
    let mut n_rows = 0usize;
    {
        let mut reader = csv_reader(&bytes);
        let mut record = csv::ByteRecord::new();
        let mut rec_no = 0usize;
        while reader.read_byte_record(&mut record).map_err(wrap_csv)? {
            if rec_no < first_data_record {
                rec_no += 1;
                continue;
            }
            rec_no += 1;
            // Tolerate a lone trailing empty field (files with trailing commas).
            let mut len = record.len();
            if len == width + 1 && record.get(width) == Some(b"") {
                len = width;
            }
            if len != width {
                return Err(DataError::RaggedRow {
                    row: n_rows,
                    expected: width,
                    found: record.len(),
                });
            }
            for (i, builder) in builders.iter_mut().enumerate() {
                builder.push(&field(&record, i));
            }
            n_rows += 1;
        }
    }

    // Labels.
    let label_tokens = builders
        .iter()
        .find_map(|b| match b {
            Builder::Label { tokens } => Some(tokens.clone()),
            _ => None,
        })
        .expect("schema has a label column");
    let labels = binarize_labels(&label_tokens, &config.label_spec).map_err(|e| match e {
        DataError::UnmappedToken { row, token } => DataError::LabelParseFailure { row, token },
        other => other,
    })?;

    // Assemble columns, applying the level-count guard.
    let mut schema = Vec::with_capacity(width);
    let mut features = Vec::new();
    for (i, builder) in builders.into_iter().enumerate() {
        let (kind, mut role) = specs[i].expect("resolved");
        if let Some(data) = builder.finish() {
            let guard_limit = config.max_level_fraction * n_rows as f64;
            let over_limit = match &data {
                ColumnData::Categorical { levels, .. } => {
                    n_rows > 0 && levels.len() as f64 > guard_limit
                }
                _ => false,
            };
            if over_limit {
                role = ColumnRole::Dropped;
            } else {
                features.push(FeatureColumn {
                    schema: ColumnSchema {
                        name: names[i].clone(),
                        kind,
                        role,
                    },
                    data,
                });
            }
        }
        schema.push(ColumnSchema {
            name: names[i].clone(),
            kind,
            role,
        });
    }

    if let Some(expected) = config.expected_counts {
        let count_y1 = labels.iter().filter(|&&y| y == 1).count() as u64;
        let count_y0 = labels.len() as u64 - count_y1;
        if expected.n_rows != n_rows
            || expected.count_y0 != count_y0
            || expected.count_y1 != count_y1
        {
            return Err(DataError::CountMismatch {
                expected: format!(
                    "{} rows, {}/{} per class",
                    expected.n_rows, expected.count_y0, expected.count_y1
                ),
                found: format!("{n_rows} rows, {count_y0}/{count_y1} per class"),
            });
        }
    }

    Ok(TabularDataset {
        schema,
        features,
        labels,
        n_rows,
        provenance: Provenance {
            path: path.display().to_string(),
            sha256,
        },
    })
}

fn hex(digest: &[u8]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
