//! The plot command: re-render roc_all.svg from the ROC CSVs a previous
//! run stored, using results.json for legend labels and AUCs when present.

use std::path::{Path, PathBuf};

use idsbench_core::metrics::RocCurve;
use idsbench_core::plot::render_roc_svg;

use crate::config::CliError;
use crate::report::ResultsTable;

const KNOWN_IDS: [&str; 6] = ["lr", "rf", "gbm", "dl", "sl1", "sl2"];

/// Rebuild roc_all.svg in `dir`; returns the SVG path.
pub fn replot(dir: &Path) -> Result<PathBuf, CliError> {
    let table = {
        let path = dir.join("results.json");
        if path.exists() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            Some(ResultsTable::from_json(&text)?)
        } else {
            None
        }
    };

    let mut curves = Vec::new();
    for id in KNOWN_IDS {
        let path = dir.join(format!("roc_{id}.csv"));
        if !path.exists() {
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        let curve = RocCurve::from_csv(&text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let (label, auc) = match table.as_ref().and_then(|t| t.row(id)) {
            Some(row) => (row.label.clone(), row.auc),
            None => (id.to_uppercase(), curve.trapezoid_area()),
        };
        curves.push((label, auc, curve));
    }
    if curves.is_empty() {
        return Err(CliError::Data(format!(
            "no roc_<model>.csv files found in {}",
            dir.display()
        )));
    }
    let svg_path = dir.join("roc_all.svg");
    std::fs::write(&svg_path, render_roc_svg(&curves))
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", svg_path.display())))?;
    Ok(svg_path)
}
