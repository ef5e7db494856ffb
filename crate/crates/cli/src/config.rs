//! Run configuration: defaults, the JSON config file, and flag merging.
//! Flags override file values; the manifest records the merged result.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use idsbench_core::dataset::{builtin_schema, ScenarioId, SchemaConfig};
use idsbench_core::learners::{ForestParams, GbmParams, GlmParams, MlpParams};

/// Top-level CLI failure, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Config(String),
    /// Exit code 3.
    Data(String),
    /// Exit code 4.
    Train(String),
    /// Exit code 5.
    Expectation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Train(_) => 4,
            CliError::Expectation(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Train(m) => write!(f, "training error: {m}"),
            CliError::Expectation(m) => write!(f, "expectation check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Per-learner hyperparameter overrides, all optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerOverrides {
    pub glm: Option<GlmParams>,
    pub random_forest: Option<ForestParams>,
    pub gbm: Option<GbmParams>,
    pub mlp: Option<MlpParams>,
    /// Meta learner of SL1 (neural network).
    pub meta_mlp: Option<MlpParams>,
    /// Meta learner of SL2 (gradient boosting).
    pub meta_gbm: Option<GbmParams>,
}

/// The JSON config file; every field optional so flags can fill gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub learners: LearnerOverrides,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Flag values as parsed from the command line (None = not given).
#[derive(Debug, Clone, Default)]
pub struct RunFlags {
    pub scenario: Option<String>,
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub k: Option<usize>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub dry_run: bool,
}

/// Fully resolved configuration with every default materialized; the
/// manifest embeds this verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub scenario: ScenarioId,
    pub data: PathBuf,
    /// Path of a schema override; None means the shipped scenario schema.
    pub schema_path: Option<PathBuf>,
    pub seed: u64,
    pub test_fraction: f64,
    pub k: usize,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub dry_run: bool,
    pub glm: GlmParams,
    pub random_forest: ForestParams,
    pub gbm: GbmParams,
    pub mlp: MlpParams,
    pub meta_mlp: MlpParams,
    pub meta_gbm: GbmParams,
}

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_K: usize = 5;

/// SL1's meta network: one small hidden layer over the 3-column meta
/// features, trained longer than the wide base network.
pub fn default_meta_mlp() -> MlpParams {
    MlpParams {
        hidden_layers: vec![16],
        epochs: 50,
        ..MlpParams::default()
    }
}

/// SL2's meta booster: shallow and short, sized for 3-column inputs.
pub fn default_meta_gbm() -> GbmParams {
    GbmParams {
        n_rounds: 50,
        max_depth: 3,
        ..GbmParams::default()
    }
}

/// Merge flags over the config file over defaults.
pub fn resolve(flags: &RunFlags, file: &ConfigFile) -> Result<ResolvedConfig, CliError> {
    let scenario_text = flags
        .scenario
        .clone()
        .or_else(|| file.scenario.clone())
        .ok_or_else(|| CliError::Config("missing --scenario (network | android | iot)".into()))?;
    let scenario = ScenarioId::parse(&scenario_text)
        .ok_or_else(|| CliError::Config(format!("unknown scenario {scenario_text:?}")))?;
    let data = flags
        .data
        .clone()
        .or_else(|| file.data.clone())
        .ok_or_else(|| CliError::Config("missing --data <path>".into()))?;
    let test_fraction = flags
        .test_fraction
        .or(file.test_fraction)
        .unwrap_or(DEFAULT_TEST_FRACTION);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CliError::Config(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let k = flags.k.or(file.k).unwrap_or(DEFAULT_K);
    if k < 2 {
        return Err(CliError::Config(format!("k must be >= 2, got {k}")));
    }
    let out = flags
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(format!("idsbench-out-{scenario}")));
    Ok(ResolvedConfig {
        scenario,
        data,
        schema_path: flags.schema.clone().or_else(|| file.schema.clone()),
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        test_fraction,
        k,
        out,
        workers: flags.workers.or(file.workers),
        dry_run: flags.dry_run,
        glm: file.learners.glm.clone().unwrap_or_default(),
        random_forest: file.learners.random_forest.clone().unwrap_or_default(),
        gbm: file.learners.gbm.clone().unwrap_or_default(),
        mlp: file.learners.mlp.clone().unwrap_or_default(),
        meta_mlp: file
            .learners
            .meta_mlp
            .clone()
            .unwrap_or_else(default_meta_mlp),
        meta_gbm: file
            .learners
            .meta_gbm
            .clone()
            .unwrap_or_else(default_meta_gbm),
    })
}

/// The schema a resolved config asks for: an explicit file or the shipped
/// scenario schema.
pub fn load_schema(config: &ResolvedConfig) -> Result<SchemaConfig, CliError> {
    match &config.schema_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            SchemaConfig::from_json(&text).map_err(|e| CliError::Config(e.to_string()))
        }
        None => Ok(builtin_schema(config.scenario)),
    }
}
