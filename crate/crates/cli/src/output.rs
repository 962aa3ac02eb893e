//! JSON, CSV and text rendering. Output depends only on the resolved
//! configuration and the computed values, never on timing or thread count.

use std::fmt::Write as _;

use beta_calc::inequalities::InequalityReport;
use serde::Serialize;

use crate::config::{Format, RunConfig};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Top-level JSON document.
#[derive(Debug, Serialize)]
pub struct Document<'a> {
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config_echo: &'a RunConfig,
    pub reports: Vec<InequalityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub name: String,
    pub reason: String,
}

/// A flat table for `--format csv`.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn report_table(reports: &[InequalityReport]) -> Table {
    let mut t = Table::new(&[
        "name",
        "lhs",
        "rhs",
        "slack",
        "holds",
        "tol_report",
        "m",
        "M",
        "n",
        "N",
        "L",
        "bound_source",
        "converged",
        "nan_encountered",
        "max_terms",
        "tail_estimate",
        "witness",
        "notes",
    ]);
    for r in reports {
        let p = &r.params;
        let d = &r.diagnostics;
        t.push(vec![
            r.name.clone(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.slack.to_string(),
            r.holds.to_string(),
            r.tol_report.to_string(),
            p.m.to_string(),
            p.big_m.to_string(),
            opt(p.n),
            opt(p.big_n),
            opt(p.lipschitz),
            serde_json::to_value(p.source)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            d.converged.to_string(),
            d.nan_encountered.to_string(),
            d.max_terms.to_string(),
            d.tail_estimate.to_string(),
            r.witness.clone().unwrap_or_default(),
            d.notes.join("; "),
        ]);
    }
    t
}

/// One line per report for text output and stderr.
pub fn report_line(r: &InequalityReport) -> String {
    let mut s = format!(
        "{:<20} {}  lhs = {:e}  rhs = {:e}  slack = {:e}",
        r.name,
        if r.holds { "holds   " } else { "VIOLATED" },
        r.lhs,
        r.rhs,
        r.slack
    );
    if !r.diagnostics.converged {
        s.push_str("  (not converged)");
    }
    if let Some(w) = &r.witness {
        let _ = write!(s, "\n{:<20} {w}", "");
    }
    for n in &r.diagnostics.notes {
        let _ = write!(s, "\n{:<20} note: {n}", "");
    }
    s
}

pub fn text_reports(reports: &[InequalityReport]) -> String {
    reports.iter().map(|r| report_line(r) + "\n").collect()
}

fn csv_string(table: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).expect("writing to memory");
    for row in &table.rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8")
}

pub fn render(format: Format, doc: &Document, text: &str, table: &Table) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(doc).expect("documents serialize") + "\n",
        Format::Csv => csv_string(table),
        Format::Text => text.to_string(),
    }
}
