//! Scenario runner for `fermisig-core`: configuration, suites, result files
//! and baseline comparison. The `fermisig` binary is a thin shell over
//! [`run`], [`compare`] and [`config::ScenarioConfig::validate`].

pub mod config;
pub mod output;
pub mod suites;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::LoadedConfig;
use crate::output::{read_csv, sha256_hex, write_csv, write_json};
use crate::suites::{Context, Suite, SuiteResult};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "FERMISIG_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fermisig_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("suite {suite} failed: {source}")]
    Suite { suite: String, source: Box<LabError> },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
}

impl LabError {
    pub fn kind(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Core(_) => "core",
            LabError::Io(_) => "io",
            LabError::Suite { .. } => "suite",
            LabError::ManifestMismatch(_) => "manifest_mismatch",
        }
    }

    /// Machine-readable form for stderr and `error.json`.
    pub fn report(&self) -> Value {
        let mut v = json!({ "error": self.kind(), "message": self.to_string() });
        if let LabError::Suite { suite, source } = self {
            v["suite"] = json!(suite);
            v["cause"] = json!(source.kind());
        }
        v
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteStatus {
    pub suite: String,
    pub passed: bool,
    pub failed_checks: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub suites: Vec<SuiteStatus>,
    pub results: Vec<SuiteResult>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

/// Hash of the settings that fix the shape of every emitted table.
pub fn layout_hash(cfg: &config::ScenarioConfig) -> String {
    let layout = json!({
        "regime": cfg.regime,
        "suites": cfg.suite_order().unwrap_or_default().iter().map(|s| s.name()).collect::<Vec<_>>(),
        "k_grid": cfg.k_grid,
        "mass": cfg.mass,
        "lattice": cfg.lattice,
        "checks": cfg.checks,
        "seed": cfg.seed,
    });
    sha256_hex(layout.to_string().as_bytes())
}

/// Validates, runs every requested suite in dependency order and writes
/// `<suite>.csv`, `<suite>.json` and `manifest.json`. A suite that errors
/// stops the run and leaves `error.json` next to the manifest.
pub fn run(loaded: &LoadedConfig, output_override: Option<&Path>) -> Result<RunSummary, LabError> {
    let started = Instant::now();
    let cfg = loaded.config.clone();
    let out_dir = output_override.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
    let order = cfg.suite_order()?;
    let ctx = Context::new(cfg.clone())?;
    std::fs::create_dir_all(&out_dir).map_err(|e| LabError::Io(format!("{}: {e}", out_dir.display())))?;
    let _ = std::fs::remove_file(out_dir.join("error.json"));
    let mut statuses = Vec::new();
    let mut results = Vec::new();
    let mut failure = None;
    for suite in order {
        let t = Instant::now();
        match ctx.run(suite) {
            Ok(res) => {
                write_csv(&out_dir.join(format!("{}.csv", suite.name())), &res.table)?;
                write_json(&out_dir.join(format!("{}.json", suite.name())), &res.to_json())?;
                statuses.push(SuiteStatus {
                    suite: suite.name().into(),
                    passed: res.passed(),
                    failed_checks: res.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect(),
                    seconds: t.elapsed().as_secs_f64(),
                });
                results.push(res);
            }
            Err(e) => {
                let err = LabError::Suite { suite: suite.name().into(), source: Box::new(e) };
                write_json(&out_dir.join("error.json"), &err.report())?;
                failure = Some(err);
                break;
            }
        }
    }
    let manifest = json!({
        "config_sha256": sha256_hex(loaded.raw.as_bytes()),
        "layout_sha256": layout_hash(&cfg),
        "config": cfg,
        "suites": statuses,
        "tolerances": results.iter().map(|r| (r.suite.name().to_string(), json!(r.checks.iter().map(|c| (c.name.clone(), json!(c.bound))).collect::<serde_json::Map<_, _>>()))).collect::<serde_json::Map<_, _>>(),
        "versions": {
            "fermisig_core": fermisig_core::VERSION,
            "fermisig_lab": env!("CARGO_PKG_VERSION"),
        },
        "threads": rayon::current_num_threads(),
        "status": if failure.is_some() { "error" } else if statuses.iter().all(|s| s.passed) { "passed" } else { "failed" },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(RunSummary { output_dir: out_dir, suites: statuses, results }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub file: String,
    pub row: usize,
    pub column: String,
    pub run: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub rtol: f64,
    pub config_changed: bool,
    pub files: Vec<String>,
    /// Structural differences: missing files, headers or row counts.
    pub structural: Vec<String>,
    pub discrepancies: Vec<Discrepancy>,
}

impl CompareReport {
    pub fn is_clean(&self) -> bool {
        self.structural.is_empty() && self.discrepancies.is_empty()
    }

    /// `(file, column)` pairs with at least one flagged cell.
    pub fn flagged_columns(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self.discrepancies.iter().map(|d| (d.file.clone(), d.column.clone())).collect();
        out.sort();
        out.dedup();
        out
    }
}

fn read_manifest(dir: &Path) -> Result<Value, LabError> {
    let p = dir.join("manifest.json");
    let text = std::fs::read_to_string(&p).map_err(|e| LabError::Io(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| LabError::Io(format!("{}: {e}", p.display())))
}

/// `|a − b| ≤ rtol·(|a| + |b|)`, with NaN equal to NaN; `rtol = 1` accepts
/// every pair of finite numbers.
pub fn close(a: f64, b: f64, rtol: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    if a == b {
        return true;
    }
    (a - b).abs() <= rtol * (a.abs() + b.abs())
}

/// Cell-by-cell comparison of every suite table of `baseline` against `run`.
pub fn compare(run_dir: &Path, baseline_dir: &Path, rtol: f64) -> Result<CompareReport, LabError> {
    if !(rtol >= 0.0) {
        return Err(LabError::Config(format!("rtol must be non-negative, got {rtol}")));
    }
    let (mr, mb) = (read_manifest(run_dir)?, read_manifest(baseline_dir)?);
    if mr["layout_sha256"] != mb["layout_sha256"] {
        return Err(LabError::ManifestMismatch(format!(
            "run layout {} differs from baseline layout {}",
            mr["layout_sha256"], mb["layout_sha256"]
        )));
    }
    let mut report = CompareReport {
        rtol,
        config_changed: mr["config_sha256"] != mb["config_sha256"],
        files: Vec::new(),
        structural: Vec::new(),
        discrepancies: Vec::new(),
    };
    let names: Vec<String> = mb["suites"]
        .as_array()
        .map(|a| a.iter().filter_map(|s| s["suite"].as_str().map(String::from)).collect())
        .unwrap_or_default();
    for name in names {
        let file = format!("{name}.csv");
        let (pr, pb) = (run_dir.join(&file), baseline_dir.join(&file));
        if !pr.exists() {
            report.structural.push(format!("{file}: missing from the run"));
            continue;
        }
        let (tr, tb) = (read_csv(&pr)?, read_csv(&pb)?);
        report.files.push(file.clone());
        if tr.columns != tb.columns || tr.rows.len() != tb.rows.len() {
            report.structural.push(format!("{file}: header or row count differs"));
            continue;
        }
        for (i, (a, b)) in tr.rows.iter().zip(&tb.rows).enumerate() {
            for (j, (&x, &y)) in a.iter().zip(b).enumerate() {
                if !close(x, y, rtol) {
                    report.discrepancies.push(Discrepancy { file: file.clone(), row: i, column: tr.columns[j].clone(), run: x, baseline: y });
                }
            }
        }
    }
    Ok(report)
}

/// Installs the global thread pool from [`THREADS_ENV`] when set.
pub fn init_threads() -> Result<(), LabError> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| LabError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(LabError::Config(format!("{THREADS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| LabError::Config(e.to_string()))?;
    }
    Ok(())
}

pub fn list_suites() -> Vec<(&'static str, &'static str)> {
    Suite::ALL.iter().map(|s| (s.name(), s.description())).collect()
}
