//! End-to-end CLI behavior on synthetic data: exports, determinism,
//! exit codes, and the re-integration oracle over exported curves.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::write_synthetic;
use idsbench::config::{resolve, ConfigFile, RunFlags};
use idsbench::report::{export_report, ResultsTable};
use idsbench::run::run_scenario;
use idsbench_core::metrics::{fixed4, EvalReport, RocCurve};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idsbench"))
}

fn run_args(data: &Path, schema: &Path, config: &Path, out: &Path) -> Vec<String> {
    [
        "run",
        "--scenario",
        "network",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn full_run_exports_every_artifact_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");

    let status = bin()
        .args(run_args(&data, &schema, &config, &out1))
        .status()
        .unwrap();
    assert!(status.success());

    for name in [
        "results.json",
        "reports.json",
        "table.txt",
        "manifest.json",
        "roc_all.svg",
        "roc_lr.csv",
        "roc_rf.csv",
        "roc_gbm.csv",
        "roc_dl.csv",
        "roc_sl1.csv",
        "roc_sl2.csv",
        "models/lr.json",
        "models/rf.json",
        "models/gbm.json",
        "models/dl.json",
        "models/sl1.json",
        "models/sl2.json",
    ] {
        assert!(out1.join(name).exists(), "missing {name}");
    }

    let table =
        ResultsTable::from_json(&fs::read_to_string(out1.join("results.json")).unwrap()).unwrap();
    let ids: Vec<&str> = table.rows.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, vec!["lr", "rf", "gbm", "dl", "sl1", "sl2"]);
    for row in &table.rows {
        assert!(
            (0.0..=1.0).contains(&row.auc),
            "{}: auc {}",
            row.id,
            row.auc
        );
        assert!((0.0..=1.0).contains(&row.accuracy));
        assert!((0.0..=1.0).contains(&row.f_score));
        let annotated = row.id.starts_with("sl");
        assert_eq!(!row.candidates.is_empty(), annotated);
        if annotated {
            assert_eq!(row.candidates, "RF, DL, GBM");
        }
    }
    // The synthetic signal is learnable; every model must beat chance.
    for row in &table.rows {
        assert!(row.auc > 0.6, "{} auc {}", row.id, row.auc);
    }

    // Second run with a different worker count: byte-identical results.
    let mut args = run_args(&data, &schema, &config, &out2);
    let pos = args.iter().position(|a| a == "--workers").unwrap();
    args[pos + 1] = "1".to_string();
    let status = bin().args(args).status().unwrap();
    assert!(status.success());
    assert_eq!(
        fs::read(out1.join("results.json")).unwrap(),
        fs::read(out2.join("results.json")).unwrap()
    );
    for id in ["lr", "rf", "gbm", "dl", "sl1", "sl2"] {
        assert_eq!(
            fs::read(out1.join(format!("roc_{id}.csv"))).unwrap(),
            fs::read(out2.join(format!("roc_{id}.csv"))).unwrap()
        );
        assert_eq!(
            fs::read(out1.join(format!("models/{id}.json"))).unwrap(),
            fs::read(out2.join(format!("models/{id}.json"))).unwrap()
        );
    }
    assert_eq!(
        fs::read(out1.join("roc_all.svg")).unwrap(),
        fs::read(out2.join("roc_all.svg")).unwrap()
    );
}

#[test]
fn table_text_matches_results_json_to_four_decimals() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(run_args(&data, &schema, &config, &out))
        .status()
        .unwrap();
    assert!(status.success());
    let table =
        ResultsTable::from_json(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    let text = fs::read_to_string(out.join("table.txt")).unwrap();
    for row in &table.rows {
        let line = text
            .lines()
            .find(|l| l.starts_with(&row.label))
            .unwrap_or_else(|| panic!("no line for {}", row.label));
        for value in [row.auc, row.accuracy, row.f_score] {
            assert!(
                line.contains(&fixed4(value)),
                "line {line:?} missing {}",
                fixed4(value)
            );
        }
    }
}

#[test]
fn exported_curves_reintegrate_to_the_reported_auc() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(run_args(&data, &schema, &config, &out))
        .status()
        .unwrap();
    assert!(status.success());
    let table =
        ResultsTable::from_json(&fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    for row in &table.rows {
        let csv = fs::read_to_string(out.join(format!("roc_{}.csv", row.id))).unwrap();
        let curve = RocCurve::from_csv(&csv).unwrap();
        let area = curve.trapezoid_area();
        assert!(
            (area - row.auc).abs() < 1e-9,
            "{}: area {area} vs auc {}",
            row.id,
            row.auc
        );
    }

    // The exported reports agree with the table and their own confusion
    // matrices.
    let reports: Vec<EvalReport> =
        serde_json::from_str(&fs::read_to_string(out.join("reports.json")).unwrap()).unwrap();
    assert_eq!(reports.len(), table.rows.len());
    for (report, row) in reports.iter().zip(&table.rows) {
        assert_eq!(report.model_id, row.label);
        assert_eq!(report.auc, row.auc);
        assert_eq!(report.accuracy, row.accuracy);
        assert_eq!(report.f_score, row.f_score);
        assert_eq!(report.accuracy, report.confusion.accuracy());
        assert_eq!(report.confusion.total(), report.n_pos + report.n_neg);
    }
}

#[test]
fn dry_run_writes_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());
    let out = dir.path().join("out");
    let mut args = run_args(&data, &schema, &config, &out);
    args.push("--dry-run".to_string());
    let status = bin().args(args).status().unwrap();
    assert!(status.success());
    assert!(out.join("manifest.json").exists());
    assert!(!out.join("results.json").exists());
    assert!(!out.join("table.txt").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["dataset_sha256"].is_string());
    assert_eq!(manifest["config"]["seed"], 42);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());

    // Missing scenario: config error, code 2.
    let status = bin()
        .args(["run", "--data", data.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Missing file: data error, code 3, and the manifest-so-far is left
    // behind for the audit trail.
    let failed_out = dir.path().join("x");
    let status = bin()
        .args([
            "run",
            "--scenario",
            "network",
            "--data",
            "/nonexistent/none.csv",
            "--schema",
            schema.to_str().unwrap(),
            "--config",
            config.to_str().unwrap(),
            "--out",
            failed_out.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
    assert!(failed_out.join("manifest.json").exists());
    assert!(!failed_out.join("results.json").exists());

    // Mismatching reference counts: expectation failure, code 5.
    let status = bin()
        .args([
            "inspect-data",
            "--data",
            data.to_str().unwrap(),
            "--scenario",
            "network",
            "--schema",
            schema.to_str().unwrap(),
            "--expect-paper-counts",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(5));

    // Invalid hyperparameters: training error, code 4.
    let bad_config = dir.path().join("bad.json");
    fs::write(
        &bad_config,
        r#"{ "learners": { "gbm": { "n_rounds": 5, "max_depth": 0, "shrinkage": 0.1,
             "min_samples_leaf": 1, "leaf_lambda": 1.0 } } }"#,
    )
    .unwrap();
    let status = bin()
        .args([
            "run",
            "--scenario",
            "network",
            "--data",
            data.to_str().unwrap(),
            "--schema",
            schema.to_str().unwrap(),
            "--config",
            bad_config.to_str().unwrap(),
            "--out",
            dir.path().join("bad-out").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn inspect_data_prints_summary() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, _) = write_synthetic(dir.path());
    let output = bin()
        .args([
            "inspect-data",
            "--data",
            data.to_str().unwrap(),
            "--scenario",
            "network",
            "--schema",
            schema.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("rows:              400"), "{text}");
    assert!(text.contains("class counts:      280 / 120"), "{text}");
    assert!(text.contains("balanced counts:   120 / 120"), "{text}");
}

#[test]
fn plot_command_restores_deleted_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config) = write_synthetic(dir.path());
    let out = dir.path().join("out");
    let status = bin()
        .args(run_args(&data, &schema, &config, &out))
        .status()
        .unwrap();
    assert!(status.success());
    let original = fs::read(out.join("roc_all.svg")).unwrap();
    fs::remove_file(out.join("roc_all.svg")).unwrap();
    let status = bin()
        .args(["plot", "--in", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(fs::read(out.join("roc_all.svg")).unwrap(), original);
}

#[test]
fn library_path_equals_cli_path_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (data, schema, config_path) = write_synthetic(dir.path());
    let file = ConfigFile::load(&config_path).unwrap();
    let flags = RunFlags {
        scenario: Some("network".into()),
        data: Some(data),
        schema: Some(schema),
        out: Some(dir.path().join("lib-out")),
        workers: Some(2),
        ..RunFlags::default()
    };
    let config = resolve(&flags, &file).unwrap();
    let first = run_scenario(&config);
    let second = run_scenario(&config);
    let a = first.result.unwrap();
    let b = second.result.unwrap();
    assert_eq!(a.table, b.table);
    assert_eq!(a.models.len(), 6);
    for (ma, mb) in a.models.iter().zip(&b.models) {
        assert_eq!(ma.document, mb.document);
    }
    // Exporting the same in-memory results twice is byte-stable.
    let out_a = dir.path().join("exp-a");
    let out_b = dir.path().join("exp-b");
    export_report(&a, &first.manifest, &out_a).unwrap();
    export_report(&a, &first.manifest, &out_b).unwrap();
    assert_eq!(
        fs::read(out_a.join("results.json")).unwrap(),
        fs::read(out_b.join("results.json")).unwrap()
    );
    assert_eq!(
        fs::read(out_a.join("manifest.json")).unwrap(),
        fs::read(out_b.join("manifest.json")).unwrap()
    );
}
