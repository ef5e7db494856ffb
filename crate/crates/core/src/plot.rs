//! Standalone SVG rendering of ROC curves: unit axes, a diagonal
//! reference line, one polyline per model, and a legend carrying each
//! model's AUC to four decimals.

use crate::metrics::{fixed4, RocCurve};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 20.0;
const PLOT_W: f64 = 540.0;
const PLOT_H: f64 = 440.0;

fn sx(fpr: f64) -> String {
    format!("{:.2}", LEFT + fpr * PLOT_W)
}

fn sy(tpr: f64) -> String {
    format!("{:.2}", TOP + (1.0 - tpr) * PLOT_H)
}

/// Render one SVG with every (label, auc, curve) overlaid.
///
/// Output is a pure function of the inputs: fixed float formatting, fixed
/// palette order, no timestamps.
pub fn render_roc_svg(curves: &[(String, f64, RocCurve)]) -> String {
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // Frame and gridlines at quarter ticks.
    svg.push_str(&format!(
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"none\" \
         stroke=\"black\" stroke-width=\"1\"/>\n"
    ));
    for i in 0..=4 {
        let t = f64::from(i) / 4.0;
        let label = format!("{t:.2}");
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{y1}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            x = sx(t),
            y0 = sy(0.0),
            y1 = sy(1.0),
        ));
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            y = sy(t),
            x0 = sx(0.0),
            x1 = sx(1.0),
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"middle\">{label}</text>\n",
            x = sx(t),
            y = TOP + PLOT_H + 18.0,
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
            x = LEFT - 6.0,
            y = TOP + (1.0 - t) * PLOT_H + 4.0,
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{x}\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\">False positive rate</text>\n",
        x = LEFT + PLOT_W / 2.0,
        y = TOP + PLOT_H + 40.0,
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{y}\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 16 {y})\">True positive rate</text>\n",
        y = TOP + PLOT_H / 2.0,
    ));

    // Chance diagonal.
    svg.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"#999999\" \
         stroke-width=\"1\" stroke-dasharray=\"6,4\"/>\n",
        x0 = sx(0.0),
        y0 = sy(0.0),
        x1 = sx(1.0),
        y1 = sy(1.0),
    ));

    for (idx, (_, _, curve)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let points: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{},{}", sx(p.fpr), sy(p.tpr)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n",
            points.join(" ")
        ));
    }

    // Legend, bottom right.
    let legend_x = LEFT + PLOT_W - 240.0;
    let mut legend_y = TOP + PLOT_H - 16.0 * curves.len() as f64 - 12.0;
    for (idx, (label, auc, _)) in curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let line_y = format!("{legend_y:.2}");
        let text_y = format!("{:.2}", legend_y + 4.0);
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{line_y}\" x2=\"{x1}\" y2=\"{line_y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x0 = legend_x,
            x1 = legend_x + 24.0,
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{text_y}\" font-size=\"12\">{label} (AUC = {auc_text})</text>\n",
            x = legend_x + 30.0,
            auc_text = fixed4(*auc),
        ));
        legend_y += 16.0;
    }

    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::roc_points;

    fn sample_curve() -> RocCurve {
        roc_points(&[0.9, 0.7, 0.4, 0.2], &[1, 1, 0, 0]).unwrap()
    }

    #[test]
    fn svg_contains_polyline_and_legend() {
        let svg = render_roc_svg(&[("GBM".to_string(), 0.99955, sample_curve())]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("GBM (AUC = 0.9996)"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let curves = vec![
            ("A".to_string(), 0.5, sample_curve()),
            ("B".to_string(), 1.0, sample_curve()),
        ];
        assert_eq!(render_roc_svg(&curves), render_roc_svg(&curves));
    }
}
