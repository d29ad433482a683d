use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// One named pass/fail check of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn le(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value <= threshold }
    }

    pub fn lt(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value < threshold }
    }

    pub fn ge(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value >= threshold }
    }

    pub fn gt(name: &str, value: f64, threshold: f64) -> Self {
        Check { name: name.into(), value, threshold, pass: value > threshold }
    }

    pub fn flag(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: f64::from(u8::from(ok)), threshold: 1.0, pass: ok }
    }
}

/// A CSV table written to `series/<name>.csv`.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Series { name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub struct Outcome {
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    pub series: Vec<Series>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Serialize)]
struct Report<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    subcommand: &'a str,
    /// seconds since the Unix epoch
    timestamp: u64,
    config: &'a C,
    passed: bool,
    checks: &'a [Check],
    result: &'a serde_json::Value,
}

pub fn write_all<C: Serialize>(dir: &Path, subcommand: &str, config: &C, out: &Outcome) -> Result<()> {
    let series_dir = dir.join("series");
    std::fs::create_dir_all(&series_dir).with_context(|| format!("creating {}", series_dir.display()))?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let report = Report {
        tool: "hypbq",
        version: env!("CARGO_PKG_VERSION"),
        core_version: hypbq_core::VERSION,
        subcommand,
        timestamp,
        config,
        passed: out.passed(),
        checks: &out.checks,
        result: &out.result,
    };
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    for s in &out.series {
        let path = series_dir.join(format!("{}.csv", s.name));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(&s.header)?;
        for row in &s.rows {
            w.write_record(row.iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
    }
    Ok(())
}
