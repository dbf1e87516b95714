//! Experiment harness for the optabc engine: declarative configs, seeded
//! repetition over a grid of colony settings, per-run traces, and summary
//! tables.

pub mod config;
pub mod experiment;
pub mod report;

pub use config::{parse_config, parse_str, Cell, ExperimentConfig, ParseError, DEFAULT_SEEDS};
pub use experiment::{run_experiment, ExperimentReport, HarnessError, Manifest, Status};
pub use report::{regenerate, summarize, summary_csv, CellSummary};
