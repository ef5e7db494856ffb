//! Performance smoke test at the largest scenario's scale. Ignored by
//! default; run with `cargo test -p idsbench --test scale -- --ignored --nocapture`.

use std::time::Instant;

use idsbench_core::learners::{
    train, ForestParams, GbmParams, GlmParams, LearnerParams, LearnerSpec, MlpParams,
};
use idsbench_core::matrix::Matrix;
use idsbench_core::metrics::auc;
use idsbench_core::rng::Rng;

/// Balanced two-class data shaped like the largest scenario after
/// under-sampling and encoding: strong signal, some noise columns.
fn synthetic_wide(n: usize, width: usize, seed: u64) -> (Matrix, Vec<u8>) {
    let mut rng = Rng::new(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = u8::from(i % 2 == 0);
        let mut row = Vec::with_capacity(width);
        for j in 0..width {
            let signal = if j % 7 == 0 {
                f64::from(y) * (0.8 + 0.1 * (j % 5) as f64)
            } else {
                0.0
            };
            row.push(signal + rng.uniform(-1.0, 1.0));
        }
        rows.push(row);
        labels.push(y);
    }
    (Matrix::from_rows(rows), labels)
}

#[test]
#[ignore = "performance smoke test; minutes of CPU"]
fn base_learner_fits_at_full_scale() {
    let n = 38_881;
    let width = 77;
    let (x, y) = synthetic_wide(n, width, 7);
    let (x_test, y_test) = synthetic_wide(4_000, width, 8);

    let specs = [
        (
            "glm",
            LearnerSpec {
                params: LearnerParams::Glm(GlmParams::default()),
                seed: 1,
            },
        ),
        (
            "gbm",
            LearnerSpec {
                params: LearnerParams::Gbm(GbmParams::default()),
                seed: 2,
            },
        ),
        (
            "forest",
            LearnerSpec {
                params: LearnerParams::RandomForest(ForestParams::default()),
                seed: 3,
            },
        ),
        (
            "mlp",
            LearnerSpec {
                params: LearnerParams::Mlp(MlpParams::default()),
                seed: 4,
            },
        ),
    ];
    for (name, spec) in specs {
        let started = Instant::now();
        let model = train(&x, &y, &spec).unwrap();
        let fit_seconds = started.elapsed().as_secs_f64();
        let started = Instant::now();
        let scores = model.predict_proba(&x_test).unwrap();
        let predict_seconds = started.elapsed().as_secs_f64();
        let test_auc = auc(&scores, &y_test).unwrap();
        println!(
            "{name}: fit {fit_seconds:.1}s, predict {predict_seconds:.2}s, test auc {test_auc:.4}"
        );
        assert!(test_auc > 0.9, "{name} auc {test_auc}");
    }
}
