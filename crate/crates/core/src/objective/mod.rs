//! Objective functions (always minimised), the fitness transform, and the
//! evaluation ledger.

mod benchmarks;
pub mod external;
mod ledger;

use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{Position, SearchSpace, Value};

pub use benchmarks::{rastrigin, rosenbrock, sphere, Benchmark, BuiltinObjective};
pub use external::{ExternalSession, PROTOCOL_VERSION};
pub use ledger::{EvalRecord, EvaluationLedger, Phase};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("objective value {0} is not finite")]
    NonFinite(f64),
    #[error("evaluator did not reply within {0:?}")]
    Timeout(Duration),
    #[error("evaluator exited ({status}); last output: {raw:?}")]
    Crashed { status: String, raw: String },
    #[error("evaluator reported an error for request {id}: {message}")]
    Evaluator { id: u64, message: String },
    #[error("protocol error: {detail}; reply: {raw:?}")]
    Protocol { detail: String, raw: String },
    #[error("failed to start evaluator `{command}`: {reason}")]
    Spawn { command: String, reason: String },
    #[error("evaluator session is closed")]
    Closed,
    #[error("i/o error talking to evaluator: {0}")]
    Io(String),
}

/// Maps a minimised objective to a fitness in `(0, inf)`:
/// `1 / (1 + f)` for `f >= 0` and `1 + |f|` otherwise.
pub fn fitness(f: f64) -> Result<f64, EvalError> {
    if !f.is_finite() {
        return Err(EvalError::NonFinite(f));
    }
    Ok(if f >= 0.0 { 1.0 / (1.0 + f) } else { 1.0 + f.abs() })
}

/// Anything that scores a position. Lower is better.
pub trait Objective: Send {
    fn evaluate(&mut self, position: &[Value]) -> Result<f64, EvalError>;
}

impl<F> Objective for F
where
    F: FnMut(&[Value]) -> f64 + Send,
{
    fn evaluate(&mut self, position: &[Value]) -> Result<f64, EvalError> {
        Ok(self(position))
    }
}

fn default_timeout() -> f64 {
    60.0
}

fn default_sigma() -> f64 {
    0.1
}

/// Declarative objective description. Accuracy-style external objectives
/// are expected to reply with `1 - accuracy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Builtin {
        function: Benchmark,
        /// Standard deviation of the additive noise (noisy-sphere only).
        #[serde(default = "default_sigma")]
        noise_sigma: f64,
        #[serde(default)]
        noise_seed: u64,
    },
    External {
        command: Vec<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
    },
}

impl ObjectiveSpec {
    pub fn builtin(function: Benchmark) -> Self {
        ObjectiveSpec::Builtin { function, noise_sigma: default_sigma(), noise_seed: 0 }
    }

    /// Starts `workers` independent evaluators for `space`.
    pub fn build(&self, space: &SearchSpace, workers: usize) -> Result<Evaluator, EvalError> {
        let workers = workers.max(1);
        let mut pool: Vec<Box<dyn Objective>> = Vec::with_capacity(workers);
        for w in 0..workers {
            match self {
                ObjectiveSpec::Builtin { function, noise_sigma, noise_seed } => {
                    pool.push(Box::new(BuiltinObjective::new(
                        *function,
                        *noise_sigma,
                        noise_seed.wrapping_add(w as u64),
                    )));
                }
                ObjectiveSpec::External { command, timeout_secs } => {
                    let timeout = Duration::from_secs_f64(timeout_secs.max(0.001));
                    pool.push(Box::new(ExternalSession::spawn(command, space, timeout)?));
                }
            }
        }
        Ok(Evaluator::new(pool))
    }
}

/// A pool of objective workers. Batches are split round-robin across the
/// workers; results always come back in submission order.
pub struct Evaluator {
    workers: Vec<Box<dyn Objective>>,
}

impl Evaluator {
    pub fn new(workers: Vec<Box<dyn Objective>>) -> Self {
        assert!(!workers.is_empty(), "evaluator pool needs at least one worker");
        Self { workers }
    }

    pub fn single(objective: impl Objective + 'static) -> Self {
        Self::new(vec![Box::new(objective)])
    }

    pub fn workers(&self) -> usize {
        self.workers.len()
    }

    pub fn evaluate_batch(&mut self, positions: &[Position]) -> Vec<Result<(f64, Duration), EvalError>> {
        let timed = |obj: &mut Box<dyn Objective>, p: &Position| {
            let start = Instant::now();
            let f = obj.evaluate(p)?;
            if !f.is_finite() {
                return Err(EvalError::NonFinite(f));
            }
            Ok((f, start.elapsed()))
        };
        if self.workers.len() == 1 || positions.len() <= 1 {
            let obj = &mut self.workers[0];
            return positions.iter().map(|p| timed(obj, p)).collect();
        }
        let n = self.workers.len();
        let mut slots: Vec<Option<Result<(f64, Duration), EvalError>>> = vec![None; positions.len()];
        thread::scope(|scope| {
            let handles: Vec<_> = self
                .workers
                .iter_mut()
                .enumerate()
                .map(|(w, obj)| {
                    scope.spawn(move || {
                        (w..positions.len())
                            .step_by(n)
                            .map(|i| (i, timed(obj, &positions[i])))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (i, r) in h.join().expect("evaluator worker panicked") {
                    slots[i] = Some(r);
                }
            }
        });
        slots.into_iter().map(|s| s.expect("every slot filled")).collect()
    }

    /// Evaluates a batch and records every successful result in `ledger`,
    /// in submission order. Stops recording at the first failure.
    pub fn evaluate_recorded(
        &mut self,
        positions: &[Position],
        ledger: &mut EvaluationLedger,
        iteration: usize,
        phase: Phase,
    ) -> Result<Vec<f64>, EvalError> {
        let results = self.evaluate_batch(positions);
        let mut values = Vec::with_capacity(results.len());
        for (position, result) in positions.iter().zip(results) {
            let (objective, duration) = result?;
            ledger.push(EvalRecord { position: position.clone(), objective, duration, iteration, phase });
            values.push(objective);
        }
        Ok(values)
    }
}
