use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::space::Position;

/// Which part of the run issued an evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Employed,
    Onlooker,
    Scout,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalRecord {
    pub position: Position,
    pub objective: f64,
    pub duration: Duration,
    /// Main-loop iteration (0 for the initial population).
    pub iteration: usize,
    pub phase: Phase,
}

/// Append-only log of every objective call made during a run.
#[derive(Clone, Debug, Default)]
pub struct EvaluationLedger {
    records: Vec<EvalRecord>,
}

impl EvaluationLedger {
    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub(crate) fn push(&mut self, record: EvalRecord) {
        self.records.push(record);
    }

    /// Number of evaluations issued in `iteration` by `phase`.
    pub fn count_in(&self, iteration: usize, phase: Phase) -> usize {
        self.records.iter().filter(|r| r.iteration == iteration && r.phase == phase).count()
    }

    pub fn best(&self) -> Option<&EvalRecord> {
        self.records.iter().min_by(|a, b| a.objective.total_cmp(&b.objective))
    }
}
