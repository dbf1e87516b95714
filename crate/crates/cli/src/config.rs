//! Experiment configuration files.
//!
//! ```toml
//! budget = 5000
//! seeds = [1, 2, 3]          # optional, defaults to DEFAULT_SEEDS
//! output = "results"         # relative to the config file
//!
//! [objective]
//! builtin = "sphere"         # or: command = ["python3", "eval.py", "--mode", "cv3"]
//!
//! [[space]]
//! name = "x0"
//! kind = "continuous"
//! lower = -5.12
//! upper = 5.12
//!
//! [[cells]]
//! variant = "optabc"
//! pn = 30
//! k = 3
//! limit = 10
//! ```

use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use optabc_core::colony::{ColonyConfig, ConfigError as CellError, Variant};
use optabc_core::objective::{Benchmark, ObjectiveSpec};
use optabc_core::space::{ParamKind, ParamSpec, SearchSpace};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Used when a config does not list its own seeds.
pub const DEFAULT_SEEDS: [u64; 10] = [11, 23, 37, 101, 257, 1009, 2027, 4099, 8191, 65537];

pub const DEFAULT_LIMIT: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = &self.path {
            write!(f, "{}:", p.display())?;
        }
        if let Some(l) = self.line {
            write!(f, "{l}:")?;
        }
        if self.path.is_some() || self.line.is_some() {
            f.write_str(" ")?;
        }
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ParseError {}

/// One (variant, pn, k, limit) combination of the experiment grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub variant: Variant,
    pub pn: usize,
    pub k: Option<usize>,
    pub limit: u32,
    #[serde(default = "yes")]
    pub opposition: bool,
    /// Config line the cell starts on.
    #[serde(skip)]
    pub line: Option<usize>,
}

fn yes() -> bool {
    true
}

impl Cell {
    pub fn colony_config(&self, config: &ExperimentConfig, seed: u64) -> ColonyConfig {
        ColonyConfig {
            variant: self.variant,
            pn: self.pn,
            k_clusters: self.k,
            limit: self.limit,
            budget: Some(config.budget),
            max_iterations: config.max_iterations,
            target_objective: config.target_objective,
            seed,
            opposition: self.opposition,
        }
    }

    /// Short file-name-safe label.
    pub fn label(&self, index: usize) -> String {
        let k = match self.variant {
            Variant::OptAbc => format!("_k{}", self.colony_k()),
            _ => String::new(),
        };
        format!("cell{index:02}_{}_pn{}{k}_limit{}", self.variant, self.pn, self.limit)
    }

    /// Effective cluster count (explicit or defaulted).
    pub fn colony_k(&self) -> usize {
        self.k.unwrap_or_else(|| optabc_core::kmeans::default_k(self.pn))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub space: SearchSpace,
    pub objective: ObjectiveSpec,
    pub cells: Vec<Cell>,
    pub seeds: Vec<u64>,
    pub budget: usize,
    pub max_iterations: Option<usize>,
    pub target_objective: Option<f64>,
    pub workers: usize,
    pub output: PathBuf,
}

impl ExperimentConfig {
    /// Colony-level problems per cell (such as `k > pn`). These do not
    /// stop an experiment; the offending cells are flagged and skipped.
    pub fn cell_issues(&self) -> Vec<(usize, CellError)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.colony_config(self, self.seeds[0]).validate().err().map(|e| (i, e)))
            .collect()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    budget: Spanned<i64>,
    max_iterations: Option<Spanned<i64>>,
    target_objective: Option<Spanned<f64>>,
    seeds: Option<Spanned<Vec<Spanned<i64>>>>,
    output: Option<String>,
    workers: Option<Spanned<i64>>,
    objective: Spanned<RawObjective>,
    space: Spanned<Vec<Spanned<RawParam>>>,
    cells: Spanned<Vec<Spanned<RawCell>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObjective {
    builtin: Option<Spanned<String>>,
    noise_sigma: Option<f64>,
    noise_seed: Option<u64>,
    command: Option<Spanned<Vec<String>>>,
    timeout_secs: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: Spanned<String>,
    kind: Spanned<String>,
    lower: Option<Spanned<f64>>,
    upper: Option<Spanned<f64>>,
    categories: Option<Spanned<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    variant: Spanned<String>,
    pn: Spanned<i64>,
    k: Option<Spanned<i64>>,
    limit: Option<Spanned<i64>>,
    opposition: Option<bool>,
}

struct Lines<'a>(&'a str);

impl Lines<'_> {
    fn at(&self, offset: usize) -> usize {
        self.0[..offset.min(self.0.len())].bytes().filter(|&b| b == b'\n').count() + 1
    }

    fn err(&self, span: Range<usize>, field: impl Into<String>, message: impl Into<String>) -> ParseError {
        ParseError { path: None, line: Some(self.at(span.start)), field: Some(field.into()), message: message.into() }
    }

    fn positive(&self, v: &Spanned<i64>, field: &str) -> Result<usize, ParseError> {
        match usize::try_from(*v.get_ref()) {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(self.err(v.span(), field, format!("must be a positive integer, got {}", v.get_ref()))),
        }
    }
}

/// Reads and validates a config file. Relative output paths resolve
/// against the file's directory.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ParseError> {
    let text = std::fs::read_to_string(path).map_err(|e| ParseError {
        path: Some(path.to_owned()),
        line: None,
        field: None,
        message: format!("cannot read config: {e}"),
    })?;
    let mut config = parse_str(&text).map_err(|mut e| {
        e.path = Some(path.to_owned());
        e
    })?;
    if config.output.is_relative() {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.output = base.join(&config.output);
    }
    Ok(config)
}

pub fn parse_str(text: &str) -> Result<ExperimentConfig, ParseError> {
    let lines = Lines(text);
    let raw: RawConfig = toml::from_str(text).map_err(|e| ParseError {
        path: None,
        line: e.span().map(|s| lines.at(s.start)),
        field: None,
        message: e.message().trim().to_owned(),
    })?;

    let budget = lines.positive(&raw.budget, "budget")?;
    let max_iterations = raw.max_iterations.as_ref().map(|m| lines.positive(m, "max_iterations")).transpose()?;
    let target_objective = match &raw.target_objective {
        Some(t) if !t.get_ref().is_finite() => {
            return Err(lines.err(t.span(), "target_objective", "must be finite"))
        }
        t => t.as_ref().map(|t| *t.get_ref()),
    };
    let workers = raw.workers.as_ref().map(|w| lines.positive(w, "workers")).transpose()?.unwrap_or(1);

    let seeds = match &raw.seeds {
        None => DEFAULT_SEEDS.to_vec(),
        Some(list) => {
            if list.get_ref().is_empty() {
                return Err(lines.err(list.span(), "seeds", "at least one seed is required"));
            }
            list.get_ref()
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    u64::try_from(*s.get_ref()).map_err(|_| {
                        lines.err(s.span(), format!("seeds[{i}]"), "seeds must be non-negative")
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };

    let objective = objective(&lines, &raw.objective)?;

    if raw.space.get_ref().is_empty() {
        return Err(lines.err(raw.space.span(), "space", "at least one parameter is required"));
    }
    let mut params: Vec<ParamSpec> = Vec::new();
    for (i, p) in raw.space.get_ref().iter().enumerate() {
        let spec = param(&lines, i, p.get_ref())?;
        if params.iter().any(|q| q.name() == spec.name()) {
            return Err(lines.err(
                p.get_ref().name.span(),
                format!("space[{i}].name"),
                format!("duplicate parameter name `{}`", spec.name()),
            ));
        }
        params.push(spec);
    }
    let space = SearchSpace::new(params)
        .map_err(|e| lines.err(raw.space.span(), "space", e.to_string()))?;

    if raw.cells.get_ref().is_empty() {
        return Err(lines.err(raw.cells.span(), "cells", "at least one cell is required"));
    }
    let cells = raw
        .cells
        .get_ref()
        .iter()
        .enumerate()
        .map(|(i, c)| cell(&lines, i, c))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ExperimentConfig {
        space,
        objective,
        cells,
        seeds,
        budget,
        max_iterations,
        target_objective,
        workers,
        output: PathBuf::from(raw.output.unwrap_or_else(|| "results".into())),
    })
}

fn objective(lines: &Lines<'_>, raw: &Spanned<RawObjective>) -> Result<ObjectiveSpec, ParseError> {
    let o = raw.get_ref();
    match (&o.builtin, &o.command) {
        (Some(name), None) => {
            if o.timeout_secs.is_some() {
                return Err(lines.err(raw.span(), "objective.timeout_secs", "only applies to external commands"));
            }
            let function: Benchmark =
                name.get_ref().parse().map_err(|e: String| lines.err(name.span(), "objective.builtin", e))?;
            let noise_sigma = o.noise_sigma.unwrap_or(0.1);
            if !noise_sigma.is_finite() || noise_sigma < 0.0 {
                return Err(lines.err(raw.span(), "objective.noise_sigma", "must be a non-negative number"));
            }
            Ok(ObjectiveSpec::Builtin { function, noise_sigma, noise_seed: o.noise_seed.unwrap_or(0) })
        }
        (None, Some(command)) => {
            if command.get_ref().is_empty() {
                return Err(lines.err(command.span(), "objective.command", "must not be empty"));
            }
            if o.noise_sigma.is_some() || o.noise_seed.is_some() {
                return Err(lines.err(raw.span(), "objective", "noise settings only apply to builtin benchmarks"));
            }
            let timeout_secs = match &o.timeout_secs {
                Some(t) if !(t.get_ref().is_finite() && *t.get_ref() > 0.0) => {
                    return Err(lines.err(t.span(), "objective.timeout_secs", "must be a positive number"))
                }
                Some(t) => *t.get_ref(),
                None => 60.0,
            };
            Ok(ObjectiveSpec::External { command: command.get_ref().clone(), timeout_secs })
        }
        (Some(_), Some(_)) => Err(lines.err(raw.span(), "objective", "set either `builtin` or `command`, not both")),
        (None, None) => Err(lines.err(raw.span(), "objective", "one of `builtin` or `command` is required")),
    }
}

fn param(lines: &Lines<'_>, i: usize, p: &RawParam) -> Result<ParamSpec, ParseError> {
    let field = |f: &str| format!("space[{i}].{f}");
    let name = p.name.get_ref().clone();
    let bounds = || -> Result<(&Spanned<f64>, &Spanned<f64>), ParseError> {
        let lower = p.lower.as_ref().ok_or_else(|| lines.err(p.name.span(), field("lower"), "missing"))?;
        let upper = p.upper.as_ref().ok_or_else(|| lines.err(p.name.span(), field("upper"), "missing"))?;
        if p.categories.is_some() {
            return Err(lines.err(p.kind.span(), field("categories"), "only valid for categorical parameters"));
        }
        Ok((lower, upper))
    };
    let kind = match p.kind.get_ref().as_str() {
        "continuous" => {
            let (lo, hi) = bounds()?;
            ParamKind::Continuous { lower: *lo.get_ref(), upper: *hi.get_ref() }
        }
        "integer" => {
            let (lo, hi) = bounds()?;
            let int = |v: &Spanned<f64>, f: &str| {
                let x = *v.get_ref();
                if x.fract() != 0.0 || !x.is_finite() {
                    Err(lines.err(v.span(), field(f), format!("integer bound expected, got {x}")))
                } else {
                    Ok(x as i64)
                }
            };
            ParamKind::Integer { lower: int(lo, "lower")?, upper: int(hi, "upper")? }
        }
        "categorical" => {
            if p.lower.is_some() || p.upper.is_some() {
                return Err(lines.err(p.kind.span(), field("lower"), "bounds are not valid for categorical parameters"));
            }
            let cats = p
                .categories
                .as_ref()
                .ok_or_else(|| lines.err(p.kind.span(), field("categories"), "missing"))?;
            ParamKind::Categorical { categories: cats.get_ref().clone() }
        }
        other => {
            return Err(lines.err(
                p.kind.span(),
                field("kind"),
                format!("unknown kind `{other}` (expected continuous, integer or categorical)"),
            ))
        }
    };
    ParamSpec::new(name, kind).map_err(|e| lines.err(p.name.span(), format!("space[{i}]"), e.to_string()))
}

fn cell(lines: &Lines<'_>, i: usize, raw: &Spanned<RawCell>) -> Result<Cell, ParseError> {
    let c = raw.get_ref();
    let field = |f: &str| format!("cells[{i}].{f}");
    let variant: Variant =
        c.variant.get_ref().parse().map_err(|e: String| lines.err(c.variant.span(), field("variant"), e))?;
    let pn = lines.positive(&c.pn, &field("pn"))?;
    let k = c.k.as_ref().map(|k| lines.positive(k, &field("k"))).transpose()?;
    if k.is_some() && variant != Variant::OptAbc {
        return Err(lines.err(c.variant.span(), field("k"), "only applies to the optabc variant"));
    }
    let limit = match &c.limit {
        Some(l) => {
            let n = lines.positive(l, &field("limit"))?;
            u32::try_from(n).map_err(|_| lines.err(l.span(), field("limit"), "too large"))?
        }
        None => DEFAULT_LIMIT,
    };
    Ok(Cell {
        variant,
        pn,
        k,
        limit,
        opposition: c.opposition.unwrap_or(true),
        line: Some(lines.at(raw.span().start)),
    })
}
