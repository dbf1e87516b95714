//! Summary tables, computed only from the manifest and trace files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use optabc_core::trace::ConvergenceTrace;

use crate::experiment::{io_err, HarnessError, Manifest, Status, SUMMARY_FILE};

pub const SUMMARY_HEADER: &str = "cell,label,variant,pn,k,limit,status,runs,failed,mean_final_objective,\
min_final_objective,max_final_objective,mean_evaluations,mean_wall_seconds,note";

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub cell: usize,
    pub label: String,
    pub variant: String,
    pub pn: usize,
    pub k: Option<usize>,
    pub limit: u32,
    pub status: Status,
    /// Completed runs.
    pub runs: usize,
    pub failed: usize,
    pub mean_final: Option<f64>,
    pub min_final: Option<f64>,
    pub max_final: Option<f64>,
    pub mean_evaluations: Option<f64>,
    pub mean_wall_seconds: Option<f64>,
    pub note: String,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Builds per-cell statistics from the trace files listed in `manifest`.
pub fn summarize(dir: &Path, manifest: &Manifest) -> Result<Vec<CellSummary>, HarnessError> {
    let mut out = Vec::with_capacity(manifest.cells.len());
    for cell in &manifest.cells {
        let mut finals = Vec::new();
        let mut evals = Vec::new();
        let mut walls = Vec::new();
        let mut failed = 0;
        for run in manifest.runs.iter().filter(|r| r.cell == cell.index) {
            if run.status != Status::Ok {
                failed += 1;
                continue;
            }
            let path = dir.join(&run.trace);
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let trace = ConvergenceTrace::from_csv(&text).map_err(|source| HarnessError::Trace { path: path.clone(), source })?;
            let last = trace.last().ok_or_else(|| HarnessError::Run(format!("{}: empty trace", path.display())))?;
            finals.push(last.best_objective);
            evals.push(last.evaluations as f64);
            walls.push(last.wall_seconds);
        }
        let mut notes = Vec::new();
        if cell.k_defaulted {
            notes.push("k defaulted to pn/10".to_owned());
        }
        if let Some(e) = &cell.error {
            notes.push(e.clone());
        }
        if failed > 0 {
            notes.push(format!("{failed} run(s) failed"));
        }
        let status = match cell.status {
            Status::Invalid => Status::Invalid,
            _ if failed > 0 => Status::Failed,
            _ => Status::Ok,
        };
        out.push(CellSummary {
            cell: cell.index,
            label: cell.label.clone(),
            variant: cell.variant.to_string(),
            pn: cell.pn,
            k: cell.k,
            limit: cell.limit,
            status,
            runs: finals.len(),
            failed,
            mean_final: mean(&finals),
            min_final: finals.iter().copied().reduce(f64::min),
            max_final: finals.iter().copied().reduce(f64::max),
            mean_evaluations: mean(&evals),
            mean_wall_seconds: mean(&walls),
            note: notes.join("; "),
        });
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:?}")).unwrap_or_default()
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

pub fn summary_csv(rows: &[CellSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let status = match r.status {
            Status::Ok => "ok",
            Status::Invalid => "invalid",
            Status::Failed => "failed",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.label,
            r.variant,
            r.pn,
            r.k.map(|k| k.to_string()).unwrap_or_default(),
            r.limit,
            status,
            r.runs,
            r.failed,
            opt(r.mean_final),
            opt(r.min_final),
            opt(r.max_final),
            opt(r.mean_evaluations),
            opt(r.mean_wall_seconds),
            quote(&r.note),
        );
    }
    out
}

pub(crate) fn write_summary(dir: &Path, manifest: &Manifest) -> Result<Vec<CellSummary>, HarnessError> {
    let rows = summarize(dir, manifest)?;
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary_csv(&rows)).map_err(io_err(&path))?;
    Ok(rows)
}

/// Recomputes `summary.csv` in an experiment directory from its manifest
/// and traces, returning the table text.
pub fn regenerate(dir: &Path) -> Result<String, HarnessError> {
    let manifest = Manifest::load(dir)?;
    let rows = write_summary(dir, &manifest)?;
    Ok(summary_csv(&rows))
}
