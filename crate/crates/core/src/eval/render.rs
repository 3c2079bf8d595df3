use std::fmt::Write as _;

use serde_json::json;

use crate::error::{Error, Result};
use crate::metrics::MetricReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "text-table" => Ok(Self::Text),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::invalid(format!("unknown report format `{other}`"))),
        }
    }
}

fn iou_label(t: f64) -> String {
    format!("3D{}", (t * 100.0).round())
}

fn pose_label((deg, cm): (f64, f64), ascii: bool) -> String {
    if ascii {
        format!("{deg}deg{cm}cm")
    } else {
        format!("{deg}°{cm}cm")
    }
}

fn columns(report: &MetricReport, ascii: bool) -> Vec<String> {
    report
        .iou_thresholds
        .iter()
        .map(|&t| iou_label(t))
        .chain(report.pose_thresholds.iter().map(|&p| pose_label(p, ascii)))
        .collect()
}

/// Renders a report. The text table rounds to `decimals` places; CSV and
/// JSON carry unrounded values. Rows are the categories followed by `mean`.
pub fn render_report(report: &MetricReport, format: ReportFormat, decimals: usize) -> String {
    match format {
        ReportFormat::Text => text(report, decimals),
        ReportFormat::Csv => csv(report),
        ReportFormat::Json => json(report),
    }
}

fn text(report: &MetricReport, decimals: usize) -> String {
    let cols = columns(report, false);
    let name_w = report
        .rows()
        .map(|r| r.category.chars().count())
        .max()
        .unwrap_or(0)
        .max("category".len());
    let col_w = cols
        .iter()
        .map(|c| c.chars().count())
        .max()
        .unwrap_or(0)
        .max(6 + decimals);
    let mut out = String::new();
    let _ = write!(out, "{:<name_w$}", "category");
    for c in &cols {
        let pad = col_w - c.chars().count();
        let _ = write!(out, "  {}{c}", " ".repeat(pad));
    }
    let _ = writeln!(out, "  {:>6}", "frames");
    let width = name_w + cols.len() * (col_w + 2) + 8;
    let _ = writeln!(out, "{}", "-".repeat(width));
    let n_cat = report.categories.len();
    for (i, row) in report.rows().enumerate() {
        if i == n_cat {
            let _ = writeln!(out, "{}", "-".repeat(width));
        }
        let _ = write!(out, "{:<name_w$}", row.category);
        for v in row.iou.iter().chain(&row.pose) {
            let _ = write!(out, "  {v:>col_w$.decimals$}");
        }
        let _ = writeln!(out, "  {:>6}", row.frames);
    }
    if let Some(fps) = report.throughput_fps {
        let _ = writeln!(
            out,
            "\nthroughput: {fps:.1} frames/s (metric computation only)"
        );
    }
    out
}

fn csv(report: &MetricReport) -> String {
    let mut out = String::from("category,frames");
    for c in columns(report, true) {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
    for row in report.rows() {
        let _ = write!(out, "{},{}", row.category, row.frames);
        for v in row.iou.iter().chain(&row.pose) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn json(report: &MetricReport) -> String {
    let rows: Vec<_> = report
        .rows()
        .map(|r| {
            json!({
                "category": r.category,
                "frames": r.frames,
                "values": r.iou.iter().chain(&r.pose).collect::<Vec<_>>(),
            })
        })
        .collect();
    let value = json!({
        "columns": columns(report, true),
        "iou_thresholds": report.iou_thresholds,
        "pose_thresholds": report.pose_thresholds,
        "rows": rows,
        "frames": report.frames(),
        "throughput_fps": report.throughput_fps,
        "throughput_scope": "metric computation only",
    });
    let mut s = serde_json::to_string_pretty(&value).expect("report values are finite");
    s.push('\n');
    s
}
