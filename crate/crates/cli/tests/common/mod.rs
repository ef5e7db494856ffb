//! Shared helpers for the CLI integration and acceptance suites.

use std::fs;
use std::path::{Path, PathBuf};

use idsbench_core::rng::Rng;

/// Deterministic synthetic scenario: numeric signal, one categorical, one
/// binary column, imbalanced labels (120 attack / 280 ok). Returns the
/// (data, schema, config) paths.
pub fn write_synthetic(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let mut rng = Rng::new(2718);
    let mut csv = String::from("f1,f2,proto,flag,verdict\n");
    for i in 0..400 {
        let attack = i % 10 < 3;
        let signal = if attack { 2.0 } else { 0.0 };
        let f1 = signal + rng.uniform(-1.0, 1.0);
        let f2 = rng.uniform(-1.0, 1.0);
        let proto = match (i + usize::from(attack)) % 3 {
            0 => "tcp",
            1 => "udp",
            _ => "icmp",
        };
        let flag = u8::from(attack) ^ u8::from(rng.next_f64() < 0.2);
        let verdict = if attack { "attack" } else { "ok" };
        csv.push_str(&format!("{f1:.6},{f2:.6},{proto},{flag},{verdict}\n"));
    }
    let data = dir.join("synthetic.csv");
    fs::write(&data, csv).unwrap();

    let schema = dir.join("schema.json");
    fs::write(
        &schema,
        r#"{
  "header": true,
  "columns": [
    { "name": "f1", "kind": "numeric", "role": "feature" },
    { "name": "f2", "kind": "numeric", "role": "feature" },
    { "name": "proto", "kind": "categorical", "role": "feature" },
    { "name": "flag", "kind": "binary", "role": "feature" },
    { "name": "verdict", "kind": "categorical", "role": "label" }
  ],
  "label_spec": {
    "positive_tokens": ["attack"],
    "negative_tokens": ["ok"],
    "mode": "explicit"
  },
  "max_level_fraction": 1.0
}
"#,
    )
    .unwrap();

    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{
  "k": 3,
  "learners": {
    "glm": { "l2": 0.0001, "learning_rate": 0.1, "iterations": 80 },
    "random_forest": { "n_trees": 10, "max_depth": 8, "min_samples_leaf": 1, "mtry": null, "bootstrap": true },
    "gbm": { "n_rounds": 15, "max_depth": 3, "shrinkage": 0.1, "min_samples_leaf": 5, "leaf_lambda": 1.0 },
    "mlp": { "hidden_layers": [8], "batch_size": 32, "epochs": 6, "learning_rate": 0.01, "momentum": 0.9 },
    "meta_mlp": { "hidden_layers": [4], "batch_size": 32, "epochs": 10, "learning_rate": 0.01, "momentum": 0.9 },
    "meta_gbm": { "n_rounds": 10, "max_depth": 2, "shrinkage": 0.1, "min_samples_leaf": 5, "leaf_lambda": 1.0 }
  }
}
"#,
    )
    .unwrap();
    (data, schema, config)
}
