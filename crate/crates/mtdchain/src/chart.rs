//! Chart data for per-order accuracy barplots, with CSV and SVG emission.
//!
//! The SVG layout mirrors the reference presentation: one chart per team,
//! horizontal bars, candidate orders on the vertical axis and prediction
//! accuracy on the horizontal axis. Rendering is a pure function of the
//! data, so a chart CSV read back and re-rendered reproduces the SVG
//! byte for byte.

use std::fmt::Write as _;
use std::io::Read;

use thiserror::Error;

use crate::assess::AssessmentReport;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("invalid chart data: {0}")]
    Invalid(String),

    #[error("malformed chart CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("malformed chart CSV at line {line}: {reason}")]
    Row { line: u64, reason: String },
}

/// Per-order mean accuracies for one team.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartData {
    team: String,
    rows: Vec<(usize, f64)>,
}

impl ChartData {
    /// Rows must carry distinct ascending orders and accuracies in [0,1].
    pub fn new(team: impl Into<String>, rows: Vec<(usize, f64)>) -> Result<Self, ChartError> {
        if rows.is_empty() {
            return Err(ChartError::Invalid("chart needs at least one row".into()));
        }
        for pair in rows.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err(ChartError::Invalid(format!(
                    "orders must be distinct and ascending, got {} after {}",
                    pair[1].0, pair[0].0
                )));
            }
        }
        for &(k, acc) in &rows {
            if !(0.0..=1.0).contains(&acc) {
                return Err(ChartError::Invalid(format!(
                    "accuracy {acc} for k={k} outside [0,1]"
                )));
            }
        }
        Ok(Self {
            team: team.into(),
            rows,
        })
    }

    pub fn from_report(team: impl Into<String>, report: &AssessmentReport) -> Self {
        let rows = report.per_k.iter().map(|(&k, &a)| (k, a)).collect();
        Self {
            team: team.into(),
            rows,
        }
    }

    pub fn team(&self) -> &str {
        &self.team
    }

    pub fn rows(&self) -> &[(usize, f64)] {
        &self.rows
    }

    /// CSV document with header `team,k,accuracy`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["team", "k", "accuracy"]).expect("in-memory write");
        for &(k, acc) in &self.rows {
            w.write_record([self.team.as_str(), &k.to_string(), &acc.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    /// Parse a chart CSV produced by [`ChartData::to_csv_string`].
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, ChartError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<&str> = rdr.headers()?.iter().collect();
        if headers != ["team", "k", "accuracy"] {
            return Err(ChartError::Invalid(format!(
                "header must be `team,k,accuracy`, got {:?}",
                headers.join(",")
            )));
        }
        let mut team: Option<String> = None;
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            match &team {
                None => team = Some(record[0].to_string()),
                Some(t) if *t != record[0] => {
                    return Err(ChartError::Row {
                        line,
                        reason: format!("mixed teams {t:?} and {:?}", &record[0]),
                    })
                }
                _ => {}
            }
            let k: usize = record[1].parse().map_err(|e| ChartError::Row {
                line,
                reason: format!("bad order {:?}: {e}", &record[1]),
            })?;
            let acc: f64 = record[2].parse().map_err(|e| ChartError::Row {
                line,
                reason: format!("bad accuracy {:?}: {e}", &record[2]),
            })?;
            rows.push((k, acc));
        }
        let team = team.ok_or_else(|| ChartError::Invalid("chart CSV has no rows".into()))?;
        Self::new(team, rows)
    }

    /// Render the fixed-size horizontal barplot.
    pub fn to_svg(&self) -> String {
        const WIDTH: f64 = 640.0;
        const HEIGHT: f64 = 480.0;
        const LEFT: f64 = 70.0;
        const RIGHT: f64 = 30.0;
        const TOP: f64 = 50.0;
        const BOTTOM: f64 = 45.0;

        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let n = self.rows.len() as f64;
        let slot = plot_h / n;
        let bar_h = slot * 0.7;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="28" font-family="sans-serif" font-size="18" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape_xml(&self.team)
        );

        // Accuracy gridlines every 0.25.
        for tick in 0..=4 {
            let frac = f64::from(tick) / 4.0;
            let x = LEFT + frac * plot_w;
            let _ = writeln!(
                svg,
                r##"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="#cccccc" stroke-width="1"/>"##,
                TOP + plot_h
            );
            let _ = writeln!(
                svg,
                r#"<text x="{x:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{frac:.2}</text>"#,
                TOP + plot_h + 18.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">prediction accuracy</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 8.0
        );

        for (i, &(k, acc)) in self.rows.iter().enumerate() {
            let y = TOP + i as f64 * slot + (slot - bar_h) / 2.0;
            let w = acc * plot_w;
            let _ = writeln!(
                svg,
                r##"<rect x="{LEFT:.2}" y="{y:.2}" width="{w:.2}" height="{bar_h:.2}" fill="#4682b4"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">k={k}</text>"#,
                LEFT - 8.0,
                y + bar_h / 2.0 + 4.0
            );
        }

        // Plot frame on top of the bars.
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333333" stroke-width="1"/>"##
        );
        svg.push_str("</svg>\n");
        svg
    }
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
