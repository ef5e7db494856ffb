//! The inspect-data command: load, summarize, optionally verify the
//! published reference counts.

use std::fmt::Write as _;
use std::path::Path;

use idsbench_core::dataset::{
    load_csv, reference_counts, summarize, DatasetSummary, ScenarioId, SchemaConfig,
};

use crate::config::CliError;

/// Render a dataset summary as the table row it mirrors, plus tallies.
pub fn format_summary(scenario: ScenarioId, summary: &DatasetSummary) -> String {
    let balanced = summary.count_y0.min(summary.count_y1);
    let mut out = String::new();
    let _ = writeln!(out, "scenario:          {scenario}");
    let _ = writeln!(out, "rows:              {}", summary.n_rows);
    let _ = writeln!(out, "features:          {}", summary.n_features);
    let _ = writeln!(
        out,
        "class counts:      {} / {}",
        summary.count_y0, summary.count_y1
    );
    let _ = writeln!(out, "balanced counts:   {balanced} / {balanced}");
    if !summary.dropped_columns.is_empty() {
        let _ = writeln!(
            out,
            "dropped columns:   {}",
            summary.dropped_columns.join(", ")
        );
    }
    if !summary.categorical_levels.is_empty() {
        let levels: Vec<String> = summary
            .categorical_levels
            .iter()
            .map(|(name, count)| format!("{name}={count}"))
            .collect();
        let _ = writeln!(out, "categorical levels: {}", levels.join(", "));
    }
    if summary.missing_by_column.is_empty() {
        let _ = writeln!(out, "missing cells:     none");
    } else {
        let missing: Vec<String> = summary
            .missing_by_column
            .iter()
            .map(|(name, count)| format!("{name}={count}"))
            .collect();
        let _ = writeln!(out, "missing cells:     {}", missing.join(", "));
    }
    out
}

/// Compare a summary against the scenario's published counts; the error
/// lists every differing field.
pub fn check_reference_counts(
    scenario: ScenarioId,
    summary: &DatasetSummary,
) -> Result<(), CliError> {
    let expected = reference_counts(scenario);
    let mut diffs = Vec::new();
    if summary.n_rows != expected.n_rows {
        diffs.push(format!(
            "rows: expected {}, found {}",
            expected.n_rows, summary.n_rows
        ));
    }
    if summary.count_y0 != expected.count_y0 {
        diffs.push(format!(
            "count_y0: expected {}, found {}",
            expected.count_y0, summary.count_y0
        ));
    }
    if summary.count_y1 != expected.count_y1 {
        diffs.push(format!(
            "count_y1: expected {}, found {}",
            expected.count_y1, summary.count_y1
        ));
    }
    if let Some(features) = expected.n_features {
        if summary.n_features != features {
            diffs.push(format!(
                "features: expected {features}, found {}",
                summary.n_features
            ));
        }
    }
    let balanced = summary.count_y0.min(summary.count_y1);
    if balanced != expected.balanced_per_class {
        diffs.push(format!(
            "balanced per-class: expected {}, found {balanced}",
            expected.balanced_per_class
        ));
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(CliError::Expectation(format!(
            "{scenario}: {}",
            diffs.join("; ")
        )))
    }
}

/// Load and summarize a file; returns the printable report.
pub fn inspect_data(
    data: &Path,
    scenario: ScenarioId,
    schema: &SchemaConfig,
    expect_reference_counts: bool,
) -> Result<String, CliError> {
    let dataset = load_csv(data, schema).map_err(|e| CliError::Data(e.to_string()))?;
    let summary = summarize(&dataset);
    let mut text = format_summary(scenario, &summary);
    if expect_reference_counts {
        check_reference_counts(scenario, &summary)?;
        text.push_str("reference counts:  ok\n");
    }
    Ok(text)
}
