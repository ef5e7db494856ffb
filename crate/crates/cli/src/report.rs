//! The results table and the exported file set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use idsbench_core::dataset::ScenarioId;
use idsbench_core::metrics::fixed4;
use idsbench_core::plot::render_roc_svg;

use crate::config::CliError;
use crate::run::{RunManifest, RunOutput};

/// One classifier's row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    pub id: String,
    pub label: String,
    /// Candidate-set annotation; empty for base classifiers.
    pub candidates: String,
    pub auc: f64,
    pub accuracy: f64,
    pub f_score: f64,
}

/// Fixed six-row table: LR, RF, GBM, DL, SL1, SL2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub scenario: ScenarioId,
    pub seed: u64,
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    pub fn row(&self, id: &str) -> Option<&ResultsRow> {
        self.rows.iter().find(|r| r.id == id)
    }

    /// Plain-text grid; every value rendered to 4 decimals, half-up.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("Scenario: {}\n", self.scenario));
        out.push_str(&format!(
            "{:<22}{:<15}{:<9}{:<10}{}\n",
            "Classifier", "Candidate", "AUC", "Accuracy", "F-score"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<22}{:<15}{:<9}{:<10}{}\n",
                row.label,
                row.candidates,
                fixed4(row.auc),
                fixed4(row.accuracy),
                fixed4(row.f_score),
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("table serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<ResultsTable, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("bad results.json: {e}")))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Write results.json, table.txt, per-model ROC CSVs, the combined SVG,
/// the manifest, and every serialized model. Identical inputs produce
/// byte-identical files.
pub fn export_report(
    output: &RunOutput,
    manifest: &RunManifest,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut written = Vec::new();

    let results_path = out_dir.join("results.json");
    write_file(&results_path, &output.table.to_json())?;
    written.push(results_path);

    let table_path = out_dir.join("table.txt");
    write_file(&table_path, &output.table.to_text())?;
    written.push(table_path);

    if !output.reports.is_empty() {
        let reports_path = out_dir.join("reports.json");
        let mut text = serde_json::to_string_pretty(&output.reports).expect("reports serialize");
        text.push('\n');
        write_file(&reports_path, &text)?;
        written.push(reports_path);
    }

    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, &manifest.to_json())?;
    written.push(manifest_path);

    let mut svg_curves = Vec::new();
    for (id, curve) in &output.curves {
        let csv_path = out_dir.join(format!("roc_{id}.csv"));
        write_file(&csv_path, &curve.to_csv())?;
        written.push(csv_path);
        if let Some(row) = output.table.row(id) {
            svg_curves.push((row.label.clone(), row.auc, curve.clone()));
        }
    }
    if !svg_curves.is_empty() {
        let svg_path = out_dir.join("roc_all.svg");
        write_file(&svg_path, &render_roc_svg(&svg_curves))?;
        written.push(svg_path);
    }

    if !output.models.is_empty() {
        let models_dir = out_dir.join("models");
        std::fs::create_dir_all(&models_dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", models_dir.display())))?;
        for model in &output.models {
            let path = models_dir.join(format!("{}.json", model.id));
            write_file(&path, &model.document)?;
            written.push(path);
        }
    }
    Ok(written)
}
