use std::fs;
use std::path::{Path, PathBuf};

use optabc_core::colony::{run_spec, ColonyConfig, Variant};
use optabc_core::objective::{external::encode_params, PROTOCOL_VERSION};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};
use thiserror::Error;

use crate::config::{ExperimentConfig, ParseError};
use crate::report::{self, CellSummary};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("{path}: {source}")]
    Trace { path: PathBuf, source: optabc_core::trace::TraceError },
    #[error("{0}")]
    Run(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_owned(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Invalid,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: usize,
    pub label: String,
    pub variant: Variant,
    pub pn: usize,
    /// Effective cluster count (optabc only).
    pub k: Option<usize>,
    /// True when `k` was not given and the default was used.
    pub k_defaulted: bool,
    pub limit: u32,
    pub opposition: bool,
    pub status: Status,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub cell: usize,
    pub seed: u64,
    /// Trace path relative to the experiment directory.
    pub trace: String,
    pub status: Status,
    pub error: Option<String>,
    /// Everything needed to repeat the run.
    pub colony: ColonyConfig,
    pub best_objective: Option<f64>,
    pub best_params: Option<Map<String, Json>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub protocol_version: u32,
    pub engine_version: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
    pub runs: Vec<RunRecord>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Manifest { path, source })
    }
}

#[derive(Debug)]
pub struct ExperimentReport {
    pub manifest: Manifest,
    pub summary: Vec<CellSummary>,
}

impl ExperimentReport {
    pub fn invalid_cells(&self) -> usize {
        self.manifest.cells.iter().filter(|c| c.status == Status::Invalid).count()
    }

    pub fn failed_runs(&self) -> usize {
        self.manifest.runs.iter().filter(|r| r.status == Status::Failed).count()
    }
}

/// Runs every valid (cell, seed) pair, writing one trace per run, the
/// manifest, and a summary table into `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let out = &config.output;
    let traces = out.join(TRACE_DIR);
    fs::create_dir_all(&traces).map_err(io_err(&traces))?;

    let issues = config.cell_issues();
    let mut cells = Vec::new();
    let mut runs = Vec::new();
    for (index, cell) in config.cells.iter().enumerate() {
        let label = cell.label(index);
        let issue = issues.iter().find(|(i, _)| *i == index).map(|(_, e)| e.to_string());
        let is_opt = cell.variant == Variant::OptAbc;
        cells.push(CellRecord {
            index,
            label: label.clone(),
            variant: cell.variant,
            pn: cell.pn,
            k: is_opt.then(|| cell.colony_k()),
            k_defaulted: is_opt && cell.k.is_none(),
            limit: cell.limit,
            opposition: is_opt && cell.opposition,
            status: if issue.is_some() { Status::Invalid } else { Status::Ok },
            error: issue.clone(),
        });
        if let Some(e) = issue {
            log::warn!("{label}: skipped, {e}");
            continue;
        }
        for &seed in &config.seeds {
            let colony = cell.colony_config(config, seed);
            let rel = format!("{TRACE_DIR}/{label}_seed{seed}.csv");
            log::info!("{label} seed {seed}: running");
            let (trace, status, error, best) = match run_spec(&colony, &config.space, &config.objective, config.workers) {
                Ok(outcome) => (outcome.trace, Status::Ok, None, Some(outcome.best)),
                Err(failure) => {
                    log::error!("{label} seed {seed}: {}", failure.error);
                    (failure.trace, Status::Failed, Some(failure.error.to_string()), None)
                }
            };
            let path = out.join(&rel);
            fs::write(&path, trace.to_csv(true)).map_err(io_err(&path))?;
            runs.push(RunRecord {
                cell: index,
                seed,
                trace: rel,
                status,
                error,
                colony,
                best_objective: best.as_ref().and_then(|b| b.objective()),
                best_params: best.as_ref().map(|b| encode_params(&config.space, &b.position)),
            });
        }
    }

    let manifest = Manifest {
        protocol_version: PROTOCOL_VERSION,
        engine_version: env!("CARGO_PKG_VERSION").to_owned(),
        config: config.clone(),
        cells,
        runs,
    };
    let path = out.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    fs::write(&path, json + "\n").map_err(io_err(&path))?;

    let summary = report::write_summary(out, &manifest)?;
    Ok(ExperimentReport { manifest, summary })
}
