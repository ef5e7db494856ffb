//! The four base classifiers: regularized logistic regression, random
//! forest, gradient-boosted trees, and a feed-forward neural network.
//! All of them train on an encoded matrix and expose probability scoring.

pub mod forest;
pub mod gbm;
pub mod glm;
pub mod mlp;
pub mod tree;

pub use forest::ForestModel;
pub use gbm::GbmModel;
pub use glm::GlmModel;
pub use mlp::MlpModel;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::matrix::Matrix;

/// Errors from training and scoring.
#[derive(Debug, Clone, PartialEq)]
pub enum LearnError {
    InvalidHyperparameters { message: String },
    NonFiniteLoss { at: String },
    WidthMismatch { expected: usize, found: usize },
    LengthMismatch { rows: usize, labels: usize },
    BadModelDocument { message: String },
}

impl fmt::Display for LearnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LearnError::InvalidHyperparameters { message } => {
                write!(f, "invalid hyperparameters: {message}")
            }
            LearnError::NonFiniteLoss { at } => {
                write!(f, "training loss became non-finite at {at}")
            }
            LearnError::WidthMismatch { expected, found } => {
                write!(
                    f,
                    "input width {found} does not match training width {expected}"
                )
            }
            LearnError::LengthMismatch { rows, labels } => {
                write!(f, "{rows} rows but {labels} labels")
            }
            LearnError::BadModelDocument { message } => write!(f, "bad model document: {message}"),
        }
    }
}

impl std::error::Error for LearnError {}

/// Logistic-regression hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub iterations: u32,
}

impl Default for GlmParams {
    fn default() -> Self {
        GlmParams {
            l2: 1e-4,
            learning_rate: 0.1,
            iterations: 500,
        }
    }
}

/// Random-forest hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: u32,
    /// None grows until purity.
    pub max_depth: Option<u32>,
    pub min_samples_leaf: u32,
    /// Candidate features per split; None means ceil(sqrt(p)).
    pub mtry: Option<u32>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            bootstrap: true,
        }
    }
}

/// Gradient-boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub n_rounds: u32,
    pub max_depth: u32,
    pub shrinkage: f64,
    pub min_samples_leaf: u32,
    /// Additive damping of leaf values (denominator regularizer).
    pub leaf_lambda: f64,
}

impl Default for GbmParams {
    fn default() -> Self {
        GbmParams {
            n_rounds: 100,
            max_depth: 5,
            shrinkage: 0.1,
            min_samples_leaf: 10,
            leaf_lambda: 1.0,
        }
    }
}

/// Neural-network hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_layers: Vec<u32>,
    pub batch_size: u32,
    pub epochs: u32,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_layers: vec![64, 64],
            batch_size: 128,
            epochs: 20,
            learning_rate: 0.01,
            momentum: 0.9,
        }
    }
}

/// Which classifier family a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerFamily {
    Glm,
    RandomForest,
    Gbm,
    Mlp,
}

impl LearnerFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerFamily::Glm => "glm",
            LearnerFamily::RandomForest => "random_forest",
            LearnerFamily::Gbm => "gbm",
            LearnerFamily::Mlp => "mlp",
        }
    }
}

impl fmt::Display for LearnerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Family-specific hyperparameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LearnerParams {
    Glm(GlmParams),
    RandomForest(ForestParams),
    Gbm(GbmParams),
    Mlp(MlpParams),
}

impl LearnerParams {
    pub fn family(&self) -> LearnerFamily {
        match self {
            LearnerParams::Glm(_) => LearnerFamily::Glm,
            LearnerParams::RandomForest(_) => LearnerFamily::RandomForest,
            LearnerParams::Gbm(_) => LearnerFamily::Gbm,
            LearnerParams::Mlp(_) => LearnerFamily::Mlp,
        }
    }
}

/// A classifier family, its hyperparameters, and a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    #[serde(flatten)]
    pub params: LearnerParams,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn family(&self) -> LearnerFamily {
        self.params.family()
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |message: String| Err(LearnError::InvalidHyperparameters { message });
        match &self.params {
            LearnerParams::Glm(p) => {
                if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    return bad(format!(
                        "glm learning_rate {} not in (0, 1]",
                        p.learning_rate
                    ));
                }
                if !(p.l2 >= 0.0 && p.l2.is_finite()) {
                    return bad(format!("glm l2 {} must be finite and >= 0", p.l2));
                }
            }
            LearnerParams::RandomForest(p) => {
                if p.n_trees == 0 {
                    return bad("forest needs at least one tree".into());
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be >= 1".into());
                }
                if p.max_depth == Some(0) {
                    return bad("max_depth must be >= 1".into());
                }
                if p.mtry == Some(0) {
                    return bad("mtry must be >= 1".into());
                }
            }
            LearnerParams::Gbm(p) => {
                if p.max_depth == 0 {
                    return bad("gbm max_depth must be >= 1".into());
                }
                if !(p.shrinkage >= 0.0 && p.shrinkage <= 1.0) {
                    return bad(format!("gbm shrinkage {} not in [0, 1]", p.shrinkage));
                }
                if p.min_samples_leaf == 0 {
                    return bad("min_samples_leaf must be >= 1".into());
                }
                if !(p.leaf_lambda >= 0.0 && p.leaf_lambda.is_finite()) {
                    return bad(format!(
                        "gbm leaf_lambda {} must be finite and >= 0",
                        p.leaf_lambda
                    ));
                }
            }
            LearnerParams::Mlp(p) => {
                if p.batch_size == 0 {
                    return bad("mlp batch_size must be >= 1".into());
                }
                if !(p.learning_rate > 0.0 && p.learning_rate <= 1.0) {
                    return bad(format!(
                        "mlp learning_rate {} not in (0, 1]",
                        p.learning_rate
                    ));
                }
                if !(p.momentum >= 0.0 && p.momentum < 1.0) {
                    return bad(format!("mlp momentum {} not in [0, 1)", p.momentum));
                }
                if p.hidden_layers.contains(&0) {
                    return bad("hidden layer sizes must be >= 1".into());
                }
            }
        }
        Ok(())
    }
}

/// The fitted parameters of one family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Glm(GlmModel),
    Forest(ForestModel),
    Gbm(GbmModel),
    Mlp(MlpModel),
}

/// A fitted classifier with its spec and training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub model: ModelKind,
    /// Digest of the training matrix and labels.
    pub data_digest: String,
    /// Wall time of the fit; runtime metadata, never serialized, so two
    /// identical retrains produce identical documents.
    #[serde(skip)]
    pub train_seconds: f64,
}

/// Model document version written by [`TrainedModel::to_json`].
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format_version: u32,
    #[serde(flatten)]
    model: TrainedModel,
}

impl TrainedModel {
    pub fn family(&self) -> LearnerFamily {
        self.spec.family()
    }

    /// Encoded width the model was trained on.
    pub fn input_width(&self) -> usize {
        match &self.model {
            ModelKind::Glm(m) => m.weights.len(),
            ModelKind::Forest(m) => m.input_width,
            ModelKind::Gbm(m) => m.input_width,
            ModelKind::Mlp(m) => m.input_width(),
        }
    }

    /// One probability in [0, 1] per row, in row order.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, LearnError> {
        if x.cols() != self.input_width() {
            return Err(LearnError::WidthMismatch {
                expected: self.input_width(),
                found: x.cols(),
            });
        }
        Ok(match &self.model {
            ModelKind::Glm(m) => m.predict(x),
            ModelKind::Forest(m) => m.predict(x),
            ModelKind::Gbm(m) => m.predict(x),
            ModelKind::Mlp(m) => m.predict(x),
        })
    }

    /// Versioned JSON document; round-trips to a model that predicts
    /// identically.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<TrainedModel, LearnError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| LearnError::BadModelDocument {
                message: e.to_string(),
            })?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(LearnError::BadModelDocument {
                message: format!("unsupported format_version {}", doc.format_version),
            });
        }
        Ok(doc.model)
    }
}

/// Train a classifier of the spec's family.
pub fn train(x: &Matrix, y: &[u8], spec: &LearnerSpec) -> Result<TrainedModel, LearnError> {
    spec.validate()?;
    if x.rows() != y.len() {
        return Err(LearnError::LengthMismatch {
            rows: x.rows(),
            labels: y.len(),
        });
    }
    let started = Instant::now();
    let model = match &spec.params {
        LearnerParams::Glm(p) => ModelKind::Glm(glm::train_glm(x, y, p)?),
        LearnerParams::RandomForest(p) => {
            ModelKind::Forest(forest::train_random_forest(x, y, p, spec.seed)?)
        }
        LearnerParams::Gbm(p) => ModelKind::Gbm(gbm::train_gbm(x, y, p)?),
        LearnerParams::Mlp(p) => ModelKind::Mlp(mlp::train_mlp(x, y, p, spec.seed)?),
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        model,
        data_digest: data_digest(x, y),
        train_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Digest identifying the training inputs.
pub fn data_digest(x: &Matrix, y: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((x.rows() as u64).to_le_bytes());
    hasher.update((x.cols() as u64).to_le_bytes());
    for v in x.data() {
        hasher.update(v.to_le_bytes());
    }
    hasher.update(y);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Numerically stable logistic function.
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(p) with the probability clamped away from 0 and 1; clamping applies
/// only inside loss terms, never to emitted predictions.
pub(crate) fn log_clamped(p: f64) -> f64 {
    p.clamp(1e-12, 1.0 - 1e-12).ln()
}

/// Mean cross-entropy of probabilities against binary labels.
pub(crate) fn cross_entropy(probs: &[f64], y: &[u8]) -> f64 {
    let n = probs.len() as f64;
    probs
        .iter()
        .zip(y)
        .map(|(&p, &yi)| {
            if yi == 1 {
                -log_clamped(p)
            } else {
                -log_clamped(1.0 - p)
            }
        })
        .sum::<f64>()
        / n
}
