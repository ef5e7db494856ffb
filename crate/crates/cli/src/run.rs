//! End-to-end scenario execution: ingest, balance, split, encode, train
//! the four bases and both super learners, and evaluate everything on the
//! held-out split.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use idsbench_core::dataset::{load_csv, summarize, DatasetSummary};
use idsbench_core::learners::{train, LearnerParams, LearnerSpec, TrainedModel};
use idsbench_core::metrics::{evaluate, roc_points, EvalReport, RocCurve};
use idsbench_core::preprocess::{fit_encoder, stratified_split, undersample, SamplerConfig};
use idsbench_core::rng::Rng;
use idsbench_core::stacking::{
    assemble_super_learner, build_meta_features, predict_super, refit_candidates, SuperLearnerSpec,
};

use crate::config::{load_schema, CliError, ResolvedConfig};
use crate::report::{ResultsRow, ResultsTable};

/// Candidate annotation printed on super-learner rows.
pub const CANDIDATE_SET: &str = "RF, DL, GBM";

/// Everything needed to reproduce a run bit for bit, plus wall times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub config: ResolvedConfig,
    pub dataset_sha256: Option<String>,
    pub dataset_summary: Option<DatasetSummary>,
    pub balanced_per_class: Option<u64>,
    pub train_rows: Option<usize>,
    pub test_rows: Option<usize>,
    pub encoded_width: Option<usize>,
    /// Derived substream seeds by label.
    pub substream_seeds: BTreeMap<String, u64>,
    pub stage_seconds: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: &ResolvedConfig) -> RunManifest {
        let mut substream_seeds = BTreeMap::new();
        let root = config.seed;
        for label in ["undersample", "split", "glm", "stack"] {
            substream_seeds.insert(label.to_string(), Rng::substream_seed(root, label));
        }
        let stack = Rng::substream_seed(root, "stack");
        for label in ["folds", "refit/0", "refit/1", "refit/2", "meta"] {
            substream_seeds.insert(format!("stack/{label}"), Rng::substream_seed(stack, label));
        }
        RunManifest {
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            dataset_sha256: None,
            dataset_summary: None,
            balanced_per_class: None,
            train_rows: None,
            test_rows: None,
            encoded_width: None,
            substream_seeds,
            stage_seconds: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }
}

/// One serialized model artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub id: &'static str,
    pub document: String,
}

/// The results of a full scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub table: ResultsTable,
    pub reports: Vec<EvalReport>,
    pub curves: Vec<(String, RocCurve)>,
    pub models: Vec<ModelArtifact>,
}

/// A run and its manifest-so-far; the manifest is populated as far as the
/// pipeline got, so failures still leave an audit trail.
pub struct RunAttempt {
    pub manifest: RunManifest,
    pub result: Result<RunOutput, CliError>,
}

const ROW_IDS: [&str; 6] = ["lr", "rf", "gbm", "dl", "sl1", "sl2"];
const ROW_LABELS: [&str; 6] = [
    "Logistic Regression",
    "Random Forest",
    "Gradient Boosting",
    "Deep Learning",
    "SL1: DL",
    "SL2: GBM",
];

/// Load, digest, and summarize the data without training: the dry-run
/// short circuit.
pub fn dry_run(config: &ResolvedConfig) -> RunAttempt {
    let mut manifest = RunManifest::new(config);
    let result = ingest(config, &mut manifest).map(|_| RunOutput {
        table: ResultsTable {
            scenario: config.scenario,
            seed: config.seed,
            rows: Vec::new(),
        },
        reports: Vec::new(),
        curves: Vec::new(),
        models: Vec::new(),
    });
    RunAttempt { manifest, result }
}

fn ingest(
    config: &ResolvedConfig,
    manifest: &mut RunManifest,
) -> Result<idsbench_core::dataset::TabularDataset, CliError> {
    let started = Instant::now();
    let schema = load_schema(config)?;
    let dataset = load_csv(&config.data, &schema).map_err(|e| stage_error(config, "ingest", e))?;
    manifest.dataset_sha256 = Some(dataset.provenance.sha256.clone());
    manifest.dataset_summary = Some(summarize(&dataset));
    record_time(manifest, "ingest", started);
    Ok(dataset)
}

fn stage_error<E: std::fmt::Display>(config: &ResolvedConfig, stage: &str, e: E) -> CliError {
    let scenario = config.scenario;
    match stage {
        "ingest" | "balance" | "split" | "encode" => {
            CliError::Data(format!("stage {stage}, scenario {scenario}: {e}"))
        }
        _ => CliError::Train(format!("stage {stage}, scenario {scenario}: {e}")),
    }
}

fn record_time(manifest: &mut RunManifest, stage: &str, started: Instant) {
    manifest
        .stage_seconds
        .insert(stage.to_string(), started.elapsed().as_secs_f64());
}

/// Execute the full pipeline under the configured worker cap.
pub fn run_scenario(config: &ResolvedConfig) -> RunAttempt {
    match config.workers {
        Some(workers) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                Ok(pool) => pool,
                Err(e) => {
                    return RunAttempt {
                        manifest: RunManifest::new(config),
                        result: Err(CliError::Config(format!("worker pool: {e}"))),
                    }
                }
            };
            pool.install(|| run_pipeline(config))
        }
        None => run_pipeline(config),
    }
}

fn run_pipeline(config: &ResolvedConfig) -> RunAttempt {
    let mut manifest = RunManifest::new(config);
    let result = run_stages(config, &mut manifest);
    RunAttempt { manifest, result }
}

fn run_stages(config: &ResolvedConfig, manifest: &mut RunManifest) -> Result<RunOutput, CliError> {
    let dataset = ingest(config, manifest)?;

    // Balance on the full dataset, then split.
    let started = Instant::now();
    let retained = undersample(
        &dataset.labels,
        &SamplerConfig {
            seed: Rng::substream_seed(config.seed, "undersample"),
        },
    )
    .map_err(|e| stage_error(config, "balance", e))?;
    manifest.balanced_per_class = Some(retained.len() as u64 / 2);
    record_time(manifest, "balance", started);

    let started = Instant::now();
    let retained_labels: Vec<u8> = retained.iter().map(|&i| dataset.labels[i]).collect();
    let plan = stratified_split(
        &retained_labels,
        config.test_fraction,
        Rng::substream_seed(config.seed, "split"),
    )
    .map_err(|e| stage_error(config, "split", e))?;
    let train_rows: Vec<usize> = plan.train_idx.iter().map(|&i| retained[i]).collect();
    let test_rows: Vec<usize> = plan.test_idx.iter().map(|&i| retained[i]).collect();
    manifest.train_rows = Some(train_rows.len());
    manifest.test_rows = Some(test_rows.len());
    record_time(manifest, "split", started);

    let started = Instant::now();
    let encoder =
        fit_encoder(&dataset, &train_rows).map_err(|e| stage_error(config, "encode", e))?;
    let train_set = encoder
        .encode(&dataset, &train_rows)
        .map_err(|e| stage_error(config, "encode", e))?;
    let test_set = encoder
        .encode(&dataset, &test_rows)
        .map_err(|e| stage_error(config, "encode", e))?;
    manifest.encoded_width = Some(encoder.width());
    record_time(manifest, "encode", started);

    // The standalone logistic-regression row (excluded from stacking).
    let started = Instant::now();
    let glm_spec = LearnerSpec {
        params: LearnerParams::Glm(config.glm.clone()),
        seed: Rng::substream_seed(config.seed, "glm"),
    };
    let lr = train(&train_set.matrix, &train_set.labels, &glm_spec)
        .map_err(|e| stage_error(config, "train_glm", e))?;
    record_time(manifest, "train_glm", started);

    // Shared stacking machinery: one fold pass and one refit pass feed
    // both super learners, whose models equal self-contained training
    // because all seeds are substreams of the same stack seed.
    let stack_seed = Rng::substream_seed(config.seed, "stack");
    let candidates: Vec<LearnerSpec> = vec![
        LearnerSpec {
            params: LearnerParams::RandomForest(config.random_forest.clone()),
            seed: Rng::substream_seed(stack_seed, "refit/0"),
        },
        LearnerSpec {
            params: LearnerParams::Gbm(config.gbm.clone()),
            seed: Rng::substream_seed(stack_seed, "refit/1"),
        },
        LearnerSpec {
            params: LearnerParams::Mlp(config.mlp.clone()),
            seed: Rng::substream_seed(stack_seed, "refit/2"),
        },
    ];
    let sl1_spec = SuperLearnerSpec {
        candidates: candidates.clone(),
        meta: LearnerSpec {
            params: LearnerParams::Mlp(config.meta_mlp.clone()),
            seed: Rng::substream_seed(stack_seed, "meta"),
        },
        k: config.k,
        seed: stack_seed,
    };
    let sl2_spec = SuperLearnerSpec {
        meta: LearnerSpec {
            params: LearnerParams::Gbm(config.meta_gbm.clone()),
            seed: Rng::substream_seed(stack_seed, "meta"),
        },
        ..sl1_spec.clone()
    };

    let started = Instant::now();
    let meta_features = build_meta_features(&train_set.matrix, &train_set.labels, &sl1_spec)
        .map_err(|e| stage_error(config, "meta_features", e))?;
    record_time(manifest, "meta_features", started);

    let started = Instant::now();
    let bases = refit_candidates(&train_set.matrix, &train_set.labels, &sl1_spec)
        .map_err(|e| stage_error(config, "refit_bases", e))?;
    record_time(manifest, "refit_bases", started);

    let started = Instant::now();
    let sl1 = assemble_super_learner(&sl1_spec, bases.clone(), &meta_features, &train_set.labels)
        .map_err(|e| stage_error(config, "train_meta", e))?;
    let sl2 = assemble_super_learner(&sl2_spec, bases.clone(), &meta_features, &train_set.labels)
        .map_err(|e| stage_error(config, "train_meta", e))?;
    record_time(manifest, "train_meta", started);

    // Score the held-out split. Table order: LR, RF, GBM, DL, SL1, SL2.
    let started = Instant::now();
    let [rf, gbm, dl] = <[TrainedModel; 3]>::try_from(bases).expect("three candidates");
    let score_base = |m: &TrainedModel| -> Result<Vec<f64>, CliError> {
        m.predict_proba(&test_set.matrix)
            .map_err(|e| stage_error(config, "evaluate", e))
    };
    let all_scores: Vec<Vec<f64>> = vec![
        score_base(&lr)?,
        score_base(&rf)?,
        score_base(&gbm)?,
        score_base(&dl)?,
        predict_super(&sl1, &test_set.matrix).map_err(|e| stage_error(config, "evaluate", e))?,
        predict_super(&sl2, &test_set.matrix).map_err(|e| stage_error(config, "evaluate", e))?,
    ];

    let mut reports = Vec::with_capacity(6);
    let mut curves = Vec::with_capacity(6);
    let mut rows = Vec::with_capacity(6);
    for ((scores, id), label) in all_scores.iter().zip(ROW_IDS).zip(ROW_LABELS) {
        let report = evaluate(scores, &test_set.labels, label)
            .map_err(|e| stage_error(config, "evaluate", e))?;
        let curve =
            roc_points(scores, &test_set.labels).map_err(|e| stage_error(config, "evaluate", e))?;
        rows.push(ResultsRow {
            id: id.to_string(),
            label: label.to_string(),
            candidates: if id.starts_with("sl") {
                CANDIDATE_SET.to_string()
            } else {
                String::new()
            },
            auc: report.auc,
            accuracy: report.accuracy,
            f_score: report.f_score,
        });
        reports.push(report);
        curves.push((id.to_string(), curve));
    }
    record_time(manifest, "evaluate", started);

    let models = vec![
        ModelArtifact {
            id: "lr",
            document: lr.to_json(),
        },
        ModelArtifact {
            id: "rf",
            document: rf.to_json(),
        },
        ModelArtifact {
            id: "gbm",
            document: gbm.to_json(),
        },
        ModelArtifact {
            id: "dl",
            document: dl.to_json(),
        },
        ModelArtifact {
            id: "sl1",
            document: sl1.to_json(),
        },
        ModelArtifact {
            id: "sl2",
            document: sl2.to_json(),
        },
    ];

    Ok(RunOutput {
        table: ResultsTable {
            scenario: config.scenario,
            seed: config.seed,
            rows,
        },
        reports,
        curves,
        models,
    })
}
