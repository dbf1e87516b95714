//! Artificial bee colony optimisation for black-box hyperparameter search.
//!
//! The engine minimises an objective over a mixed continuous, integer and
//! categorical [`SearchSpace`](space::SearchSpace). Three variants are
//! provided: the original ABC, the min-max probability baseline (HyP-ABC),
//! and OptABC, which condenses a K-Means-clustered random population into a
//! small working colony and lets scouts try the opposite point alongside a
//! random restart.
//!
//! ```
//! use optabc_core::prelude::*;
//!
//! let space = SearchSpace::uniform_box(3, -5.12, 5.12).unwrap();
//! let config = ColonyConfig::new(Variant::OptAbc, 30).k(10).limit(10).budget(2_000).seed(7);
//! let outcome = run_spec(&config, &space, &ObjectiveSpec::builtin(Benchmark::Sphere), 1).unwrap();
//! assert!(outcome.ledger.count() <= 2_000);
//! assert!(outcome.best.objective().unwrap() < 1.0);
//! ```

pub mod colony;
pub mod kmeans;
pub mod objective;
pub mod space;
pub mod trace;

pub mod prelude {
    pub use crate::colony::{run, run_spec, ColonyConfig, RunFailure, RunOutcome, Variant};
    pub use crate::objective::{
        fitness, Benchmark, EvalError, EvaluationLedger, Evaluator, Objective, ObjectiveSpec, Phase,
    };
    pub use crate::space::{FoodSource, ParamKind, ParamSpec, Position, SearchSpace, Value};
    pub use crate::trace::{ConvergenceTrace, TraceRow};
}
