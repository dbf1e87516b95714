//! The bee colony engine.
//!
//! Three variants share one loop of employed, onlooker and scout phases:
//!
//! * [`Variant::Abc`]: random initial population of `pn`, roulette
//!   probabilities, random scouts.
//! * [`Variant::HypAbc`]: as `Abc` but with min-max normalised onlooker
//!   probabilities.
//! * [`Variant::OptAbc`]: the `pn` random draws are condensed to
//!   `k_clusters` K-Means representatives, and each scout evaluates both a
//!   random and an opposite candidate, keeping the better.
//!
//! Every phase generates its candidates from the colony as it stood at the
//! start of the phase, using one sequential RNG stream, then evaluates them
//! as a batch and applies greedy selection in index order. Parallel
//! evaluation therefore never changes the trajectory.

pub mod phases;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kmeans::{self, KMeansError};
use crate::objective::{EvalError, EvaluationLedger, Evaluator, ObjectiveSpec, Phase};
use crate::space::{FoodSource, Position, SearchSpace};
use crate::trace::{ConvergenceTrace, TraceRow};

pub use phases::{move_dimension, neighbor_move, probabilities_from_fitness, selection_probabilities};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "abc")]
    Abc,
    #[serde(rename = "hyp-abc")]
    HypAbc,
    #[serde(rename = "optabc")]
    OptAbc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Abc => "abc",
            Variant::HypAbc => "hyp-abc",
            Variant::OptAbc => "optabc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "abc" => Ok(Variant::Abc),
            "hyp-abc" => Ok(Variant::HypAbc),
            "optabc" => Ok(Variant::OptAbc),
            _ => Err(format!("unknown variant `{s}` (expected abc, hyp-abc or optabc)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("pn must be positive")]
    ZeroPopulation,
    #[error("k_clusters must be positive")]
    ZeroClusters,
    #[error("k_clusters ({k}) must not exceed pn ({pn})")]
    ClustersExceedPopulation { k: usize, pn: usize },
    #[error("the colony needs at least two food sources, got {0}")]
    SingleSource(usize),
    #[error("limit must be positive")]
    ZeroLimit,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("max_iterations must be positive")]
    ZeroIterations,
    #[error("budget {budget} cannot cover the initial population of {needed}")]
    BudgetBelowPopulation { budget: usize, needed: usize },
    #[error("at least one of budget, max_iterations or target_objective must be set")]
    NoStoppingRule,
    #[error("target_objective must be finite")]
    NonFiniteTarget,
}

#[derive(Debug, Error)]
pub enum ColonyError {
    #[error("invalid colony configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("population seeding failed: {0}")]
    Seeding(#[from] KMeansError),
    #[error("evaluation failed: {0}")]
    Evaluation(#[from] EvalError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColonyConfig {
    pub variant: Variant,
    /// Size of the random initial population.
    pub pn: usize,
    /// Working population for `OptAbc`; defaults to [`kmeans::default_k`].
    pub k_clusters: Option<usize>,
    /// Non-improving attempts after which a source is abandoned.
    pub limit: u32,
    /// Maximum number of objective evaluations.
    pub budget: Option<usize>,
    pub max_iterations: Option<usize>,
    /// Stop once the best objective is at or below this value.
    pub target_objective: Option<f64>,
    pub seed: u64,
    /// Opposite-point scout candidate (`OptAbc` only).
    pub opposition: bool,
}

impl ColonyConfig {
    pub fn new(variant: Variant, pn: usize) -> Self {
        Self {
            variant,
            pn,
            k_clusters: None,
            limit: 10,
            budget: None,
            max_iterations: None,
            target_objective: None,
            seed: 0,
            opposition: true,
        }
    }

    pub fn k(mut self, k: usize) -> Self {
        self.k_clusters = Some(k);
        self
    }

    pub fn limit(mut self, limit: u32) -> Self {
        self.limit = limit;
        self
    }

    pub fn budget(mut self, budget: usize) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn max_iterations(mut self, iterations: usize) -> Self {
        self.max_iterations = Some(iterations);
        self
    }

    pub fn target(mut self, target: f64) -> Self {
        self.target_objective = Some(target);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn opposition(mut self, enabled: bool) -> Self {
        self.opposition = enabled;
        self
    }

    /// Effective cluster count for `OptAbc`.
    pub fn clusters(&self) -> usize {
        self.k_clusters.unwrap_or_else(|| kmeans::default_k(self.pn))
    }

    /// Number of food sources the phases work on.
    pub fn working_size(&self) -> usize {
        match self.variant {
            Variant::OptAbc => self.clusters(),
            Variant::Abc | Variant::HypAbc => self.pn,
        }
    }

    pub fn uses_opposition(&self) -> bool {
        self.variant == Variant::OptAbc && self.opposition
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.pn == 0 {
            return Err(ConfigError::ZeroPopulation);
        }
        if self.variant == Variant::OptAbc {
            let k = self.clusters();
            if k == 0 {
                return Err(ConfigError::ZeroClusters);
            }
            if k > self.pn {
                return Err(ConfigError::ClustersExceedPopulation { k, pn: self.pn });
            }
        }
        if self.working_size() < 2 {
            return Err(ConfigError::SingleSource(self.working_size()));
        }
        if self.limit == 0 {
            return Err(ConfigError::ZeroLimit);
        }
        if self.budget.is_none() && self.max_iterations.is_none() && self.target_objective.is_none() {
            return Err(ConfigError::NoStoppingRule);
        }
        if let Some(budget) = self.budget {
            if budget == 0 {
                return Err(ConfigError::ZeroBudget);
            }
            if budget < self.working_size() {
                return Err(ConfigError::BudgetBelowPopulation { budget, needed: self.working_size() });
            }
        }
        if self.max_iterations == Some(0) {
            return Err(ConfigError::ZeroIterations);
        }
        if matches!(self.target_objective, Some(t) if !t.is_finite()) {
            return Err(ConfigError::NonFiniteTarget);
        }
        Ok(())
    }
}

/// Evaluations issued by one main-loop iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IterationStats {
    pub employed: usize,
    pub onlooker: usize,
    pub scouts: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub best: FoodSource,
    pub trace: ConvergenceTrace,
    pub ledger: EvaluationLedger,
    /// Food sources at termination.
    pub sources: Vec<FoodSource>,
}

/// A run that stopped on an error, with everything recorded up to it.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct RunFailure {
    #[source]
    pub error: ColonyError,
    pub trace: ConvergenceTrace,
    pub ledger: EvaluationLedger,
}

/// A colony in progress. [`run`] drives it to termination; the phase
/// methods are public so callers can step through an iteration.
pub struct Colony<'a> {
    config: ColonyConfig,
    space: &'a SearchSpace,
    evaluator: &'a mut Evaluator,
    rng: ChaCha8Rng,
    sources: Vec<FoodSource>,
    best: Option<FoodSource>,
    iteration: usize,
    ledger: EvaluationLedger,
    trace: ConvergenceTrace,
    started: Instant,
}

impl<'a> Colony<'a> {
    pub fn new(
        config: ColonyConfig,
        space: &'a SearchSpace,
        evaluator: &'a mut Evaluator,
    ) -> Result<Self, ConfigError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Self {
            config,
            space,
            evaluator,
            rng,
            sources: Vec::new(),
            best: None,
            iteration: 0,
            ledger: EvaluationLedger::default(),
            trace: ConvergenceTrace::default(),
            started: Instant::now(),
        })
    }

    pub fn sources(&self) -> &[FoodSource] {
        &self.sources
    }

    pub fn best(&self) -> Option<&FoodSource> {
        self.best.as_ref()
    }

    pub fn ledger(&self) -> &EvaluationLedger {
        &self.ledger
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn remaining(&self) -> usize {
        self.config.budget.map_or(usize::MAX, |b| b.saturating_sub(self.ledger.count()))
    }

    fn note_best(&mut self, position: &Position, objective: f64) {
        if self.best.as_ref().and_then(FoodSource::objective).is_none_or(|b| objective < b) {
            self.best = Some(FoodSource::evaluated(position.clone(), objective));
        }
    }

    fn evaluate(&mut self, candidates: &[Position], phase: Phase) -> Result<Vec<f64>, EvalError> {
        let before = self.ledger.count();
        let values = self.evaluator.evaluate_recorded(candidates, &mut self.ledger, self.iteration, phase);
        // Results recorded before a failure still count towards the best.
        let recorded: Vec<(Position, f64)> = self.ledger.records()[before..]
            .iter()
            .map(|r| (r.position.clone(), r.objective))
            .collect();
        for (p, f) in &recorded {
            self.note_best(p, *f);
        }
        values
    }

    /// Draws and evaluates the initial population.
    pub fn initialize(&mut self) -> Result<(), ColonyError> {
        let positions = match self.config.variant {
            Variant::OptAbc => {
                kmeans::seed_population(self.space, self.config.pn, self.config.clusters(), &mut self.rng)?
            }
            Variant::Abc | Variant::HypAbc => {
                (0..self.config.pn).map(|_| self.space.sample_uniform(&mut self.rng)).collect()
            }
        };
        let values = self.evaluate(&positions, Phase::Init)?;
        self.sources =
            positions.into_iter().zip(values).map(|(p, f)| FoodSource::evaluated(p, f)).collect();
        self.push_row(IterationStats::default());
        Ok(())
    }

    fn greedy(&mut self, i: usize, candidate: Position, objective: f64) {
        let source = &mut self.sources[i];
        if objective < source.objective().expect("sources are evaluated") {
            *source = FoodSource::evaluated(candidate, objective);
        } else {
            source.trials += 1;
        }
    }

    /// One neighbour move and greedy selection per source.
    pub fn employed_phase(&mut self) -> Result<usize, EvalError> {
        let n = self.sources.len().min(self.remaining());
        let candidates: Vec<Position> =
            (0..n).map(|i| neighbor_move(i, &self.sources, self.space, &mut self.rng)).collect();
        let values = self.evaluate(&candidates, Phase::Employed)?;
        for (i, (c, f)) in candidates.into_iter().zip(values).enumerate() {
            self.greedy(i, c, f);
        }
        Ok(n)
    }

    /// Source `i` is exploited when a uniform draw falls below its
    /// selection probability.
    pub fn onlooker_phase(&mut self) -> Result<usize, EvalError> {
        let probabilities = selection_probabilities(&self.sources, self.config.variant);
        let remaining = self.remaining();
        let mut chosen = Vec::new();
        let mut candidates = Vec::new();
        for (i, p) in probabilities.into_iter().enumerate() {
            if candidates.len() >= remaining {
                break;
            }
            let u: f64 = rand::Rng::random(&mut self.rng);
            if u < p {
                chosen.push(i);
                candidates.push(neighbor_move(i, &self.sources, self.space, &mut self.rng));
            }
        }
        let values = self.evaluate(&candidates, Phase::Onlooker)?;
        let selected = chosen.len();
        for ((i, c), f) in chosen.into_iter().zip(candidates).zip(values) {
            self.greedy(i, c, f);
        }
        Ok(selected)
    }

    /// Replaces every source whose trial counter reached the limit.
    /// Returns the number of sources replaced.
    pub fn scout_phase(&mut self) -> Result<usize, EvalError> {
        let limit = self.config.limit;
        let opposition = self.config.uses_opposition();
        let mut remaining = self.remaining();
        let mut plans: Vec<(usize, usize)> = Vec::new();
        let mut candidates = Vec::new();
        // (source, candidates issued): one random, plus one opposite when enabled.
        for i in 0..self.sources.len() {
            if self.sources[i].trials < limit || remaining == 0 {
                continue;
            }
            candidates.push(self.space.sample_uniform(&mut self.rng));
            let mut count = 1;
            if opposition && remaining >= 2 {
                candidates.push(self.space.oppose(&self.sources[i].position));
                count = 2;
            }
            remaining -= count;
            plans.push((i, count));
        }
        let values = self.evaluate(&candidates, Phase::Scout)?;
        let mut offset = 0;
        for &(i, count) in &plans {
            let mut pick = offset;
            if count == 2 && values[offset + 1] < values[offset] {
                pick = offset + 1;
            }
            self.sources[i] = FoodSource::evaluated(candidates[pick].clone(), values[pick]);
            offset += count;
        }
        Ok(plans.len())
    }

    fn push_row(&mut self, stats: IterationStats) {
        let best = self.best.as_ref().and_then(FoodSource::objective).unwrap_or(f64::INFINITY);
        self.trace.rows.push(TraceRow {
            iteration: self.iteration,
            best_objective: best,
            evaluations: self.ledger.count(),
            employed: stats.employed,
            onlooker: stats.onlooker,
            scouts: stats.scouts,
            wall_seconds: self.started.elapsed().as_secs_f64(),
        });
    }

    fn should_stop(&self) -> bool {
        if self.remaining() == 0 {
            return true;
        }
        if self.config.max_iterations.is_some_and(|m| self.iteration >= m) {
            return true;
        }
        match (self.config.target_objective, self.best.as_ref().and_then(FoodSource::objective)) {
            (Some(target), Some(best)) => best <= target,
            _ => false,
        }
    }

    /// Opens the next main-loop iteration; evaluations are tagged with it.
    pub fn begin_iteration(&mut self) {
        self.iteration += 1;
    }

    /// Closes the current iteration by appending its trace row.
    pub fn end_iteration(&mut self, stats: IterationStats) {
        self.push_row(stats);
    }

    /// One full iteration: employed, onlooker, scout.
    pub fn step(&mut self) -> Result<IterationStats, EvalError> {
        self.begin_iteration();
        let employed = self.employed_phase()?;
        let onlooker = self.onlooker_phase()?;
        let scouts = self.scout_phase()?;
        let stats = IterationStats { employed, onlooker, scouts };
        self.end_iteration(stats);
        Ok(stats)
    }

    pub fn trace(&self) -> &ConvergenceTrace {
        &self.trace
    }

    /// True once the budget, iteration cap or target has been reached.
    pub fn finished(&self) -> bool {
        self.should_stop()
    }

    fn finish(self) -> RunOutcome {
        RunOutcome {
            best: self.best.expect("initial population was evaluated"),
            trace: self.trace,
            ledger: self.ledger,
            sources: self.sources,
        }
    }

    fn fail(self, error: ColonyError) -> RunFailure {
        RunFailure { error, trace: self.trace, ledger: self.ledger }
    }
}

/// Runs a colony to termination with the given evaluator pool.
pub fn run(
    config: &ColonyConfig,
    space: &SearchSpace,
    evaluator: &mut Evaluator,
) -> Result<RunOutcome, RunFailure> {
    let mut colony = Colony::new(config.clone(), space, evaluator).map_err(|e| RunFailure {
        error: e.into(),
        trace: ConvergenceTrace::default(),
        ledger: EvaluationLedger::default(),
    })?;
    if let Err(e) = colony.initialize() {
        return Err(colony.fail(e));
    }
    while !colony.should_stop() {
        if let Err(e) = colony.step() {
            return Err(colony.fail(e.into()));
        }
    }
    Ok(colony.finish())
}

/// Builds an evaluator pool from `spec` and runs the colony with it.
pub fn run_spec(
    config: &ColonyConfig,
    space: &SearchSpace,
    spec: &ObjectiveSpec,
    workers: usize,
) -> Result<RunOutcome, RunFailure> {
    config.validate().map_err(|e| RunFailure {
        error: e.into(),
        trace: ConvergenceTrace::default(),
        ledger: EvaluationLedger::default(),
    })?;
    let mut evaluator = spec.build(space, workers).map_err(|e| RunFailure {
        error: e.into(),
        trace: ConvergenceTrace::default(),
        ledger: EvaluationLedger::default(),
    })?;
    run(config, space, &mut evaluator)
}
