//! Experiment reports and their on-disk form: JSON manifest, CSV table, `.dat` curves.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: &str = "experiment,nu,beta,t,quantity,value,tolerance,verdict";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Recorded value without an acceptance test attached.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "pass" => Ok(Verdict::Pass),
            "fail" => Ok(Verdict::Fail),
            "info" => Ok(Verdict::Info),
            _ => Err(Error::InvalidInput(format!("unknown verdict `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub nu: Option<f64>,
    pub beta: Option<f64>,
    pub t: Option<f64>,
    pub quantity: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
}

/// Fitted constant with the sweep it was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fit {
    pub name: String,
    pub value: f64,
    /// Fit-quality measure; its meaning is given in `residual_kind`.
    pub residual: f64,
    pub residual_kind: String,
    pub domain: String,
    pub calibration_points: usize,
    pub validation_points: usize,
    pub violations: usize,
}

/// Acceptance check: one numbered criterion and its outcome in this experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    #[serde(skip)]
    pub rows: Vec<Row>,
    pub fits: Vec<Fit>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    pub notes: Vec<String>,
}

/// Per-row context for the CSV columns that depend on the sweep point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Point {
    pub nu: Option<f64>,
    pub beta: Option<f64>,
    pub t: Option<f64>,
}

impl Point {
    pub fn new(nu: f64, beta: f64) -> Self {
        Self {
            nu: Some(nu),
            beta: Some(beta),
            t: None,
        }
    }

    pub fn at(self, t: f64) -> Self {
        Self { t: Some(t), ..self }
    }
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Self::default()
        }
    }

    pub fn info(&mut self, p: Point, quantity: &str, value: f64) {
        self.push(p, quantity, value, None, Verdict::Info);
    }

    /// Records `value <= tolerance`.
    pub fn at_most(&mut self, p: Point, quantity: &str, value: f64, tolerance: f64) -> bool {
        let ok = value <= tolerance;
        self.push(p, quantity, value, Some(tolerance), Verdict::from_bool(ok));
        ok
    }

    pub fn verdict(&mut self, p: Point, quantity: &str, value: f64, tolerance: Option<f64>, ok: bool) -> bool {
        self.push(p, quantity, value, tolerance, Verdict::from_bool(ok));
        ok
    }

    fn push(&mut self, p: Point, quantity: &str, value: f64, tolerance: Option<f64>, verdict: Verdict) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            nu: p.nu,
            beta: p.beta,
            t: p.t,
            quantity: quantity.to_string(),
            value,
            tolerance,
            verdict,
        });
    }

    pub fn check(&mut self, criterion: u8, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            criterion,
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn curve(&mut self, name: &str, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) {
        self.curves.push(Curve {
            name: name.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            points,
        });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    /// True when no row or check failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.verdict != Verdict::Fail) && self.checks.iter().all(|c| c.passed)
    }

    /// Outcome of one criterion, `None` when this report does not test it.
    pub fn criterion(&self, n: u8) -> Option<bool> {
        let mut it = self.checks.iter().filter(|c| c.criterion == n).peekable();
        it.peek()?;
        Some(it.all(|c| c.passed))
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV body (header included); floats use the shortest round-tripping form.
pub fn to_csv(rows: &[Row]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.experiment,
            opt(r.nu),
            opt(r.beta),
            opt(r.t),
            r.quantity,
            r.value,
            opt(r.tolerance),
            r.verdict.as_str()
        );
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<Row>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::InvalidInput("CSV header mismatch".into()));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::InvalidInput(format!("bad CSV number {s:?}: {e}")))
    };
    let opt_num = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 8 {
                return Err(Error::InvalidInput(format!("CSV row has {} fields: {l}", f.len())));
            }
            Ok(Row {
                experiment: f[0].to_string(),
                nu: opt_num(f[1])?,
                beta: opt_num(f[2])?,
                t: opt_num(f[3])?,
                quantity: f[4].to_string(),
                value: num(f[5])?,
                tolerance: opt_num(f[6])?,
                verdict: Verdict::parse(f[7])?,
            })
        })
        .collect()
}

/// Fails early when `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".write_probe");
    fs::write(&probe, b"ok").map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
    fs::remove_file(&probe)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct ExperimentEntry<'a> {
    #[serde(flatten)]
    report: &'a ExperimentReport,
    passed: bool,
    csv: Option<String>,
    curve_files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    started_unix: u64,
    finished_unix: u64,
    config_text: &'a str,
    config_effective: String,
    config_hash: String,
    overrides: &'a [String],
    all_passed: bool,
    experiments: Vec<ExperimentEntry<'a>>,
}

/// Run-level metadata echoed into the manifest.
#[derive(Debug, Clone)]
pub struct RunMeta {
    /// Config file text exactly as read (empty when defaults were used).
    pub config_text: String,
    pub overrides: Vec<String>,
    pub started_unix: u64,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

/// Writes `manifest.json`, `<experiment>.csv` and `<experiment>__<curve>.dat` under `out`.
/// Reports with no rows get no CSV.
pub fn emit_outputs(reports: &[ExperimentReport], cfg: &RunConfig, meta: &RunMeta, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_writable(out)?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    for r in reports {
        let exp = sanitize(&r.experiment);
        let csv = if r.rows.is_empty() {
            None
        } else {
            let name = format!("{exp}.csv");
            let path = out.join(&name);
            fs::write(&path, to_csv(&r.rows))?;
            written.push(path);
            Some(name)
        };
        let mut curve_files = Vec::new();
        for c in &r.curves {
            let name = format!("{exp}__{}.dat", sanitize(&c.name));
            let mut body = String::new();
            for (x, y) in &c.points {
                let _ = writeln!(body, "{x} {y}");
            }
            let path = out.join(&name);
            fs::write(&path, body)?;
            written.push(path);
            curve_files.push(name);
        }
        entries.push(ExperimentEntry {
            report: r,
            passed: r.passed(),
            csv,
            curve_files,
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        started_unix: meta.started_unix,
        finished_unix: unix_now(),
        config_text: &meta.config_text,
        config_effective: cfg.to_text(),
        config_hash: cfg.hash(),
        overrides: &meta.overrides,
        all_passed: reports.iter().all(ExperimentReport::passed),
        experiments: entries,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidInput(format!("manifest: {e}")))?;
    fs::write(&path, text)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut r = ExperimentReport::new("demo");
        let p = Point::new(1e-3, 1.0).at(0.1 + 0.2);
        r.info(p, "a", std::f64::consts::E);
        r.at_most(Point::default(), "b", 1.0 / 3.0, 1e-6);
        r.at_most(p, "c", 5e-324, f64::MAX);
        let back = parse_csv(&to_csv(&r.rows)).unwrap();
        assert_eq!(back, r.rows);
        assert!(!r.passed());
        assert!(to_csv(&r.rows).starts_with("experiment,nu,beta,t,quantity,value,tolerance,verdict\n"));
    }

    #[test]
    fn empty_report_writes_manifest_only() {
        let dir = tempfile::tempdir().unwrap();
        let meta = RunMeta {
            config_text: "nu = 1e-3\n".into(),
            overrides: vec![],
            started_unix: 0,
        };
        let files = emit_outputs(&[ExperimentReport::new("empty")], &RunConfig::default(), &meta, dir.path()).unwrap();
        assert_eq!(files.len(), 1);
        let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(m["schema_version"], 1);
        assert_eq!(m["config_text"], "nu = 1e-3\n");
    }
}
