//! Report rows, CSV tables and the resolved configuration of one run.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::grid::{write_field, ScalarField};

/// Acceptance band of a metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    AtMost(f64),
    AtLeast(f64),
    Between(f64, f64),
    /// `|value − target| ≤ tol`.
    Near { target: f64, tol: f64 },
    /// The metric is a count or flag that must equal the target exactly.
    Exactly(f64),
}

impl Band {
    pub fn admits(self, v: f64) -> bool {
        match self {
            Band::AtMost(b) => v <= b,
            Band::AtLeast(b) => v >= b,
            Band::Between(lo, hi) => lo <= v && v <= hi,
            Band::Near { target, tol } => (v - target).abs() <= tol,
            Band::Exactly(t) => v == t,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Band::AtMost(b) => write!(f, "<= {b:e}"),
            Band::AtLeast(b) => write!(f, ">= {b:e}"),
            Band::Between(lo, hi) => write!(f, "in [{lo:e}; {hi:e}]"),
            Band::Near { target, tol } => write!(f, "{target:e} +- {tol:e}"),
            Band::Exactly(t) => write!(f, "== {t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub metric: String,
    pub value: f64,
    pub band: Band,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(experiment: &str, metric: impl Into<String>, value: f64, band: Band) -> Self {
        ReportRow { experiment: experiment.to_string(), metric: metric.into(), value, band, pass: band.admits(value) }
    }

    pub fn flag(experiment: &str, metric: impl Into<String>, ok: bool) -> Self {
        Self::new(experiment, metric, if ok { 1.0 } else { 0.0 }, Band::Exactly(1.0))
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip form, in exponent notation for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub config: Config,
    pub rows: Vec<ReportRow>,
    pub tables: Vec<Table>,
    pub fields: Vec<(String, ScalarField)>,
    pub verdict: Option<String>,
}

impl Report {
    pub fn new(command: &str, config: Config) -> Self {
        Report { command: command.to_string(), config, rows: Vec::new(), tables: Vec::new(), fields: Vec::new(), verdict: None }
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn rows_csv(&self) -> String {
        let mut t = Table::new("report", &["experiment", "metric", "value", "tolerance", "pass"]);
        for r in &self.rows {
            t.push(vec![r.experiment.clone(), r.metric.clone(), num(r.value), r.band.to_string(), r.pass.to_string()]);
        }
        t.to_csv()
    }

    /// `<file name, contents>` of every text artifact, in write order.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        let mut out = vec![("config.txt".to_string(), self.config.render()), ("report.csv".to_string(), self.rows_csv())];
        for t in &self.tables {
            out.push((format!("{}.csv", t.name), t.to_csv()));
        }
        if let Some(v) = &self.verdict {
            out.push(("verdict.txt".to_string(), format!("{v}\n")));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in self.artifacts() {
            std::fs::write(dir.join(name), text)?;
        }
        for (name, field) in &self.fields {
            write_field(field, dir.join(format!("{name}.pshf")))?;
        }
        Ok(())
    }

    /// One line per row, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{tag} {}/{} = {} ({})", r.experiment, r.metric, num(r.value), r.band);
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

/// Reads `key`, falling back to `default`, and records the value actually used.
pub fn take<T: FromStr + ToString>(cfg: &mut Config, key: &str, default: T) -> Result<T> {
    let v = cfg.get_or(key, default)?;
    cfg.set(key, v.to_string());
    Ok(v)
}

pub fn take_list<T: FromStr + ToString>(cfg: &mut Config, key: &str, default: Vec<T>) -> Result<Vec<T>> {
    let v = cfg.list_or(key, default)?;
    if v.is_empty() {
        return Err(Error::Config { line: 0, msg: format!("`{key}` is empty") });
    }
    cfg.set(key, v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
    Ok(v)
}
