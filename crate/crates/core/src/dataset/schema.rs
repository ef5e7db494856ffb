//! Scenario schema configuration: the JSON document that tells the loader
//! how to type each column and how to map raw labels to {0,1}.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ColumnRole, DataError, FeatureKind};

/// How raw label tokens map to the binary target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Every token must appear in one of the two sets.
    Explicit,
    /// Tokens in `negative_tokens` map to 0; everything else maps to 1.
    Complement,
}

/// Token sets defining the binary target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpec {
    pub positive_tokens: BTreeSet<String>,
    pub negative_tokens: BTreeSet<String>,
    pub mode: LabelMode,
}

impl LabelSpec {
    pub fn validate(&self) -> Result<(), DataError> {
        if let Some(t) = self
            .positive_tokens
            .intersection(&self.negative_tokens)
            .next()
        {
            return Err(DataError::SchemaError {
                message: format!("token {t:?} is both positive and negative"),
            });
        }
        if self.mode == LabelMode::Complement && self.negative_tokens.is_empty() {
            return Err(DataError::SchemaError {
                message: "complement mode requires negative_tokens".to_string(),
            });
        }
        Ok(())
    }
}

/// One column entry of a schema config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default = "default_role")]
    pub role: ColumnRole,
}

fn default_role() -> ColumnRole {
    ColumnRole::Feature
}

/// Exact row and class counts a file is expected to carry; checked at load
/// when present (used where label-token orientation is only verifiable by
/// count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedCounts {
    pub n_rows: usize,
    pub count_y0: u64,
    pub count_y1: u64,
}

/// The scenario schema document.
///
/// With `header = false` the column list is positional and must cover every
/// field. With `header = true` columns are matched by name; unlisted header
/// columns are an error unless `infer_unlisted` is set, in which case their
/// kind is inferred from the data and they join as features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    #[serde(default = "default_true")]
    pub header: bool,
    #[serde(default)]
    pub infer_unlisted: bool,
    pub columns: Vec<ColumnSpec>,
    pub label_spec: LabelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_counts: Option<ExpectedCounts>,
    /// Categorical feature columns whose distinct-level count exceeds this
    /// fraction of n_rows are dropped (identifier guard). Defaults to 1.0,
    /// which never triggers; schemas for identifier-prone files opt in.
    #[serde(default = "default_max_level_fraction")]
    pub max_level_fraction: f64,
}

fn default_true() -> bool {
    true
}

fn default_max_level_fraction() -> f64 {
    1.0
}

impl SchemaConfig {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let config: SchemaConfig =
            serde_json::from_str(text).map_err(|e| DataError::SchemaError {
                message: format!("invalid schema json: {e}"),
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let labels = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .count();
        if labels != 1 {
            return Err(DataError::SchemaError {
                message: format!("exactly one label column required, found {labels}"),
            });
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::SchemaError {
                    message: format!("duplicate column name {:?}", c.name),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.max_level_fraction) {
            return Err(DataError::SchemaError {
                message: "max_level_fraction must be in [0, 1]".to_string(),
            });
        }
        self.label_spec.validate()
    }

    pub fn label_column(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.role == ColumnRole::Label)
            .expect("validated schema has one label column")
    }
}

/// The three benchmark scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    /// Network intrusion detection (NSL-KDD 20% training split).
    Network,
    /// Android malware detection (Drebin-215).
    Android,
    /// IoT cyber threat detection (Edge-IIoTset ML split).
    Iot,
}

impl ScenarioId {
    pub fn parse(s: &str) -> Option<ScenarioId> {
        match s.to_ascii_lowercase().as_str() {
            "network" => Some(ScenarioId::Network),
            "android" => Some(ScenarioId::Android),
            "iot" => Some(ScenarioId::Iot),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioId::Network => "network",
            ScenarioId::Android => "android",
            ScenarioId::Iot => "iot",
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

const NETWORK_SCHEMA: &str = include_str!("../../schemas/network.json");
const ANDROID_SCHEMA: &str = include_str!("../../schemas/android.json");
const IOT_SCHEMA: &str = include_str!("../../schemas/iot.json");

/// The schema shipped for a scenario.
pub fn builtin_schema(id: ScenarioId) -> SchemaConfig {
    let text = match id {
        ScenarioId::Network => NETWORK_SCHEMA,
        ScenarioId::Android => ANDROID_SCHEMA,
        ScenarioId::Iot => IOT_SCHEMA,
    };
    SchemaConfig::from_json(text).expect("shipped schema is valid")
}

/// Published reference counts for a scenario's source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceCounts {
    pub n_rows: usize,
    pub count_y0: u64,
    pub count_y1: u64,
    /// Feature count the shipped schema must yield, when pinned.
    pub n_features: Option<usize>,
    /// Per-class size after balancing (twice this many rows retained).
    pub balanced_per_class: u64,
}

/// The expected counts `inspect-data --expect-paper-counts` verifies.
pub fn reference_counts(id: ScenarioId) -> ReferenceCounts {
    match id {
        ScenarioId::Network => ReferenceCounts {
            n_rows: 25_192,
            count_y0: 13_449,
            count_y1: 11_743,
            n_features: Some(41),
            balanced_per_class: 11_743,
        },
        ScenarioId::Android => ReferenceCounts {
            n_rows: 15_036,
            count_y0: 9_476,
            count_y1: 5_560,
            n_features: Some(215),
            balanced_per_class: 5_560,
        },
        ScenarioId::Iot => ReferenceCounts {
            n_rows: 157_800,
            count_y0: 24_301,
            count_y1: 133_499,
            n_features: None,
            balanced_per_class: 24_301,
        },
    }
}
