//! Deterministic SVG charts: accuracy-vs-batch lines per run with drift
//! markers and pipeline-change marks. No timestamps, fixed float precision,
//! and stable iteration order, so rendering the same logs twice yields
//! byte-identical files.

use std::path::Path;

use crate::error::Result;
use crate::eval::RunLog;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 150.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn fmt(v: f64) -> String {
    format!("{v:.3}")
}

/// Render one accuracy chart for a set of run logs (one polyline per run).
/// Drift detections are dotted on their line; pipeline changes are red
/// vertical ticks.
pub fn render_accuracy_chart(logs: &[RunLog], title: &str, path: &Path) -> Result<()> {
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        MARGIN_L,
        xml_escape(title)
    ));

    let max_batch = logs
        .iter()
        .flat_map(|l| l.rows.iter().map(|r| r.batch_index))
        .max()
        .unwrap_or(1)
        .max(1);
    let min_batch = logs
        .iter()
        .flat_map(|l| l.rows.iter().map(|r| r.batch_index))
        .min()
        .unwrap_or(0);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x_of = |batch: usize| -> f64 {
        MARGIN_L + plot_w * (batch - min_batch) as f64 / (max_batch - min_batch).max(1) as f64
    };
    let y_of = |acc: f64| -> f64 { MARGIN_T + plot_h * (1.0 - acc.clamp(0.0, 1.0)) };

    // axes and gridlines
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T + plot_h),
        fmt(MARGIN_L + plot_w),
        fmt(MARGIN_T + plot_h)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fmt(MARGIN_L),
        fmt(MARGIN_T),
        fmt(MARGIN_L),
        fmt(MARGIN_T + plot_h)
    ));
    for tick in 0..=10 {
        let acc = tick as f64 / 10.0;
        let y = y_of(acc);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#dddddd\"/>\n",
            fmt(MARGIN_L),
            fmt(y),
            fmt(MARGIN_L + plot_w),
            fmt(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            fmt(MARGIN_L - 6.0),
            fmt(y + 4.0),
            fmt(acc)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">batch</text>\n",
        fmt(MARGIN_L + plot_w / 2.0),
        fmt(HEIGHT - 12.0)
    ));

    // pipeline-change ticks first so lines draw over them
    for log in logs {
        for row in &log.rows {
            if row.pipeline_changed {
                let x = x_of(row.batch_index);
                svg.push_str(&format!(
                    "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"red\" stroke-opacity=\"0.35\"/>\n",
                    fmt(x),
                    fmt(MARGIN_T),
                    fmt(MARGIN_T + plot_h)
                ));
            }
        }
    }

    for (i, log) in logs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = log
            .rows
            .iter()
            .map(|r| format!("{},{}", fmt(x_of(r.batch_index)), fmt(y_of(r.accuracy))))
            .collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            color,
            points.join(" ")
        ));
        for row in &log.rows {
            if row.drift_detected {
                svg.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                    fmt(x_of(row.batch_index)),
                    fmt(y_of(row.accuracy)),
                    color
                ));
            }
        }
        let label = if logs.iter().filter(|l| l.meta.strategy == log.meta.strategy).count() > 1 {
            format!("{} (seed {})", log.meta.strategy, log.meta.seed)
        } else {
            log.meta.strategy.clone()
        };
        let ly = MARGIN_T + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt(WIDTH - MARGIN_R + 10.0),
            fmt(ly),
            fmt(WIDTH - MARGIN_R + 34.0),
            fmt(ly),
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt(WIDTH - MARGIN_R + 40.0),
            fmt(ly + 4.0),
            xml_escape(&label)
        ));
    }
    svg.push_str("</svg>\n");

    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

/// Write the full report: accuracy chart, summary table, recovery table.
pub fn render_report(logs: &[RunLog], title: &str, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir.join("plots"))?;
    let mut ordered: Vec<RunLog> = logs.to_vec();
    ordered.sort_by(|a, b| a.meta.run_id.cmp(&b.meta.run_id));
    render_accuracy_chart(&ordered, title, &out_dir.join("plots/accuracy.svg"))?;
    crate::eval::write_summary_csv(&ordered, &out_dir.join("summary.csv"))?;
    crate::eval::write_recoveries_csv(&ordered, &out_dir.join("recoveries.csv"))?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
