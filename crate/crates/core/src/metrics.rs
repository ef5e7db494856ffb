//! Evaluation layer: AUC, confusion at a fixed threshold, F-score, and ROC
//! polylines, plus CSV export for the curves.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Errors from metric computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    /// Both classes must be present for ranking metrics.
    SingleClassInput,
    /// Scores must be finite.
    NonFiniteScore { index: usize },
    /// Scores and labels must have equal length.
    LengthMismatch { scores: usize, labels: usize },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::SingleClassInput => {
                write!(f, "ranking metrics require both classes to be present")
            }
            MetricError::NonFiniteScore { index } => {
                write!(f, "non-finite score at row {index}")
            }
            MetricError::LengthMismatch { scores, labels } => {
                write!(f, "{scores} scores but {labels} labels")
            }
        }
    }
}

impl std::error::Error for MetricError {}

/// Counts of a binary confusion matrix at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub threshold: f64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / total as f64
    }
}

/// One point of a ROC polyline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC polyline from (0,0) to (1,1), non-decreasing in both coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// Area under the polyline by the trapezoid rule.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }

    /// Render as CSV with a `threshold,fpr,tpr` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }

    /// Parse the CSV produced by [`RocCurve::to_csv`].
    pub fn from_csv(text: &str) -> Result<RocCurve, String> {
        let mut points = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if ln == 0 {
                if line.trim() != "threshold,fpr,tpr" {
                    return Err(format!("unexpected header: {line}"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut field = |name: &str| -> Result<f64, String> {
                parts
                    .next()
                    .ok_or_else(|| format!("line {}: missing {name}", ln + 1))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("line {}: bad {name}: {e}", ln + 1))
            };
            points.push(RocPoint {
                threshold: field("threshold")?,
                fpr: field("fpr")?,
                tpr: field("tpr")?,
            });
        }
        Ok(RocCurve { points })
    }
}

/// Full evaluation of one model's scores on a labelled set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub auc: f64,
    pub accuracy: f64,
    pub f_score: f64,
    pub confusion: ConfusionMatrix,
    pub n_pos: u64,
    pub n_neg: u64,
}

/// Render to four decimals, rounding halves up (away from zero).
pub fn fixed4(value: f64) -> String {
    let scaled = (value.abs() * 10_000.0).round() as i64;
    let sign = if value < 0.0 && scaled != 0 { "-" } else { "" };
    format!("{sign}{}.{:04}", scaled / 10_000, scaled % 10_000)
}

fn validate(scores: &[f64], labels: &[u8]) -> Result<(u64, u64), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore { index });
    }
    let n_pos = labels.iter().filter(|&&y| y == 1).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    Ok((n_pos, n_neg))
}

/// Rank-statistic AUC with midrank tie handling.
///
/// Equals the pairwise definition: over all (positive, negative) pairs,
/// score_pos > score_neg counts 1, a tie counts 0.5, divided by
/// n_pos * n_neg. Computed in O(n log n) via sorted ranks.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (n_pos, n_neg) = validate(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // Midranks: tied scores share the average of the ranks they span.
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; the block [i, j] gets the midrank.
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    let u = rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0;
    Ok(u / (n_pos_f * n_neg as f64))
}

/// Confusion counts with the inclusive boundary rule: predict positive
/// iff score >= threshold.
pub fn confusion_at(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ConfusionMatrix, MetricError> {
    validate(scores, labels)?;
    let mut m = ConfusionMatrix {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
        threshold,
    };
    for (&s, &y) in scores.iter().zip(labels) {
        let predicted_pos = s >= threshold;
        match (predicted_pos, y) {
            (true, 1) => m.tp += 1,
            (true, _) => m.fp += 1,
            (false, 1) => m.fn_ += 1,
            (false, _) => m.tn += 1,
        }
    }
    Ok(m)
}

/// F1 of the positive class; defined as 0 when tp = 0.
pub fn f1(confusion: &ConfusionMatrix) -> f64 {
    if confusion.tp == 0 {
        return 0.0;
    }
    let tp = confusion.tp as f64;
    let precision = tp / (tp + confusion.fp as f64);
    let recall = tp / (tp + confusion.fn_ as f64);
    2.0 * precision * recall / (precision + recall)
}

/// ROC polyline: sweep a threshold down through each distinct score,
/// emitting the cumulative (fpr, tpr). Tied scores collapse to one point.
pub fn roc_points(scores: &[f64], labels: &[u8]) -> Result<RocCurve, MetricError> {
    let (n_pos, n_neg) = validate(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        let value = scores[order[i]];
        while i < order.len() && scores[order[i]] == value {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: value,
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let last = points.last().unwrap();
    if last.fpr != 1.0 || last.tpr != 1.0 {
        points.push(RocPoint {
            threshold: f64::NEG_INFINITY,
            fpr: 1.0,
            tpr: 1.0,
        });
    }
    Ok(RocCurve { points })
}

/// Assemble AUC, confusion at 0.5, accuracy, and F1 into one report.
pub fn evaluate(scores: &[f64], labels: &[u8], model_id: &str) -> Result<EvalReport, MetricError> {
    let (n_pos, n_neg) = validate(scores, labels)?;
    let confusion = confusion_at(scores, labels, 0.5)?;
    Ok(EvalReport {
        model_id: model_id.to_string(),
        auc: auc(scores, labels)?,
        accuracy: confusion.accuracy(),
        f_score: f1(&confusion),
        confusion,
        n_pos,
        n_neg,
    })
}

/// O(n^2) pairwise AUC; the reference oracle for [`auc`].
///
/// Kept in the library (rather than test code) so integration and
/// acceptance suites can cross-check the rank implementation directly.
pub fn auc_pairwise_oracle(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (n_pos, n_neg) = validate(scores, labels)?;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClassInput);
    }
    let mut wins = 0.0f64;
    for (&si, &yi) in scores.iter().zip(labels) {
        if yi != 1 {
            continue;
        }
        for (&sj, &yj) in scores.iter().zip(labels) {
            if yj == 1 {
                continue;
            }
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (n_pos as f64 * n_neg as f64))
}
