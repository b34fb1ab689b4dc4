//! Experiment runner for `causality-lab`.
//!
//! A run takes an [`ExperimentConfig`], dispatches to the core checkers and
//! returns a [`RunManifest`] whose bytes depend only on the config. Each
//! check carries an expected verdict, so a run succeeds when every check
//! lands where it was expected to, including checks expected to fail.

pub mod config;
pub mod experiments;
pub mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{Experiment, ExperimentConfig, Verdict};
pub use manifest::{CheckRecord, RunManifest, Timing};

use causality_lab::LabError;

pub const THREADS_ENV: &str = "CAUSALITY_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{}: {1}", .0.display())]
    Io(PathBuf, std::io::Error),
    #[error("incompatible manifest: {0}")]
    Incompatible(String),
    #[error("checker error: {0}")]
    Lab(#[from] LabError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lab(_) => 3,
            CliError::Io(..) | CliError::Incompatible(_) => 4,
        }
    }
}

/// Manifest, timing sidecar and extra files of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub timing: Timing,
    pub artifacts: Vec<(String, String)>,
}

/// Caps the global worker pool from [`THREADS_ENV`]. Later calls are no-ops.
pub fn init_thread_pool() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV}: expected a positive integer, got {raw:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let out = experiments::execute(cfg)?;
    if let Some(key) = cfg.expect.keys().find(|k| !out.checks.iter().any(|c| &c.0 == *k)) {
        return Err(CliError::Usage(format!("expect.{key}: no check has this id")));
    }
    let checks: Vec<CheckRecord> = out
        .checks
        .into_iter()
        .map(|(id, default, report)| {
            let expected = cfg.expect.get(&id).copied().unwrap_or(default);
            CheckRecord {
                met: Verdict::of(report.holds) == expected,
                id,
                expected,
                report,
            }
        })
        .collect();
    let config_hash = cfg.hash();
    let manifest = RunManifest {
        schema: manifest::SCHEMA.into(),
        run_id: cfg.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash.clone(),
        kind: cfg.experiment.kind().into(),
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        expectations_met: checks.iter().all(|c| c.met),
        checks,
        values: out.values,
    };
    let timing = Timing {
        run_id: cfg.name.clone(),
        config_hash,
        wall_time_ms: start.elapsed().as_millis(),
    };
    Ok(RunOutput {
        manifest,
        timing,
        artifacts: out.artifacts,
    })
}

/// Writes `manifest.json`, `residuals.csv`, `timing.json` and the artifacts.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<(), CliError> {
    let io = |p: &Path, e| CliError::Io(p.to_path_buf(), e);
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files = vec![
        ("manifest.json".to_string(), out.manifest.to_json_string()),
        ("residuals.csv".to_string(), manifest::rows_to_csv(&out.manifest.rows())),
        (
            "timing.json".to_string(),
            serde_json::to_string_pretty(&out.timing).expect("timing serializes") + "\n",
        ),
    ];
    files.extend(out.artifacts.iter().cloned());
    for (name, body) in files {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    }
    Ok(())
}
