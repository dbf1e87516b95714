//! Mixed-type hyperparameter search spaces.
//!
//! A [`SearchSpace`] is an ordered list of [`ParamSpec`] dimensions, each
//! continuous, integer or categorical. Candidate positions are plain
//! `Vec<Value>`; the space knows how to sample them, reflect them through
//! the centre of the box, embed them into the unit cube used by clustering,
//! and repair raw real-valued moves back into valid values.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::fitness;

/// A single coordinate of a candidate position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Real(f64),
    Int(i64),
    /// Index into the dimension's category list.
    Cat(usize),
}

impl Value {
    /// Numeric view used by arithmetic moves and synthetic benchmarks.
    /// Categories map to their index.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Real(x) => x,
            Value::Int(x) => x as f64,
            Value::Cat(i) => i as f64,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(x) => write!(f, "{x}"),
            Value::Int(x) => write!(f, "{x}"),
            Value::Cat(i) => write!(f, "#{i}"),
        }
    }
}

pub type Position = Vec<Value>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("search space must have at least one parameter")]
    Empty,
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("parameter `{name}`: lower bound {lower} must be strictly below upper bound {upper}")]
    Bounds { name: String, lower: f64, upper: f64 },
    #[error("parameter `{0}`: bounds must be finite")]
    NonFinite(String),
    #[error("parameter `{0}`: categorical dimension needs at least one category")]
    NoCategories(String),
    #[error("parameter `{name}`: duplicate category `{category}`")]
    DuplicateCategory { name: String, category: String },
    #[error("position has {got} components, space has {expected} dimensions")]
    Dimension { expected: usize, got: usize },
    #[error("parameter `{name}`: value {value} is not valid for this dimension")]
    InvalidValue { name: String, value: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamKind {
    Continuous { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { categories: Vec<String> },
}

#[derive(Deserialize)]
struct RawParam {
    name: String,
    #[serde(flatten)]
    kind: ParamKind,
}

/// One named dimension of a search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParam")]
pub struct ParamSpec {
    name: String,
    #[serde(flatten)]
    kind: ParamKind,
}

impl TryFrom<RawParam> for ParamSpec {
    type Error = SpaceError;

    fn try_from(raw: RawParam) -> Result<Self, SpaceError> {
        ParamSpec::new(raw.name, raw.kind)
    }
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, kind: ParamKind) -> Result<Self, SpaceError> {
        let name = name.into();
        match &kind {
            ParamKind::Continuous { lower, upper } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(SpaceError::NonFinite(name));
                }
                if lower >= upper {
                    return Err(SpaceError::Bounds { name, lower: *lower, upper: *upper });
                }
            }
            ParamKind::Integer { lower, upper } => {
                if lower >= upper {
                    return Err(SpaceError::Bounds {
                        name,
                        lower: *lower as f64,
                        upper: *upper as f64,
                    });
                }
            }
            ParamKind::Categorical { categories } => {
                if categories.is_empty() {
                    return Err(SpaceError::NoCategories(name));
                }
                let mut seen = HashSet::new();
                for c in categories {
                    if !seen.insert(c.as_str()) {
                        return Err(SpaceError::DuplicateCategory { name, category: c.clone() });
                    }
                }
            }
        }
        Ok(Self { name, kind })
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Result<Self, SpaceError> {
        Self::new(name, ParamKind::Continuous { lower, upper })
    }

    pub fn integer(name: impl Into<String>, lower: i64, upper: i64) -> Result<Self, SpaceError> {
        Self::new(name, ParamKind::Integer { lower, upper })
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        categories: impl IntoIterator<Item = S>,
    ) -> Result<Self, SpaceError> {
        let categories = categories.into_iter().map(Into::into).collect();
        Self::new(name, ParamKind::Categorical { categories })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ParamKind {
        &self.kind
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, ParamKind::Categorical { .. })
    }

    /// Number of embedded coordinates this dimension occupies.
    pub fn width(&self) -> usize {
        match &self.kind {
            ParamKind::Categorical { categories } => categories.len(),
            _ => 1,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (&self.kind, *value) {
            (ParamKind::Continuous { lower, upper }, Value::Real(x)) => {
                x.is_finite() && *lower <= x && x <= *upper
            }
            (ParamKind::Integer { lower, upper }, Value::Int(x)) => *lower <= x && x <= *upper,
            (ParamKind::Categorical { categories }, Value::Cat(i)) => i < categories.len(),
            _ => false,
        }
    }

    /// Maps a raw real coordinate (natural units, category index for
    /// categoricals) to the nearest valid value: clamp, then round half up
    /// for integer-valued dimensions.
    pub fn repair(&self, raw: f64) -> Value {
        // NaN only arises from degenerate arithmetic; send it to the lower bound.
        let raw = if raw.is_nan() { f64::NEG_INFINITY } else { raw };
        match &self.kind {
            ParamKind::Continuous { lower, upper } => Value::Real(raw.clamp(*lower, *upper)),
            ParamKind::Integer { lower, upper } => {
                let clamped = raw.clamp(*lower as f64, *upper as f64);
                Value::Int(round_half_up(clamped) as i64)
            }
            ParamKind::Categorical { categories } => {
                let top = (categories.len() - 1) as f64;
                Value::Cat(round_half_up(raw.clamp(0.0, top)) as usize)
            }
        }
    }

    /// Value at fraction `u` of the numeric range (`u = 0` is the lower
    /// bound, `u = 1` the upper), repaired. Categoricals pick the category
    /// whose index interval contains `u`.
    pub fn from_unit(&self, u: f64) -> Value {
        match &self.kind {
            ParamKind::Continuous { lower, upper } => self.repair(lower + u * (upper - lower)),
            ParamKind::Integer { lower, upper } => {
                self.repair(*lower as f64 + u * (*upper - *lower) as f64)
            }
            ParamKind::Categorical { categories } => {
                let c = categories.len();
                Value::Cat(((u * c as f64).floor() as usize).min(c - 1))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match &self.kind {
            ParamKind::Continuous { .. } => self.from_unit(rng.random::<f64>()),
            // Integers are drawn uniformly over the lattice so the end points
            // are not under-represented by rounding.
            ParamKind::Integer { lower, upper } => Value::Int(rng.random_range(*lower..=*upper)),
            ParamKind::Categorical { categories } => Value::Cat(rng.random_range(0..categories.len())),
        }
    }

    /// Reflection through the centre of the range: `upper + lower - x` for
    /// numeric dimensions, `(c - 1) - i` for the category index.
    pub fn oppose(&self, value: &Value) -> Value {
        match (&self.kind, *value) {
            (ParamKind::Continuous { lower, upper }, Value::Real(x)) => {
                self.repair(upper + lower - x)
            }
            (ParamKind::Integer { lower, upper }, Value::Int(x)) => {
                Value::Int((upper + lower - x).clamp(*lower, *upper))
            }
            (ParamKind::Categorical { categories }, Value::Cat(i)) => {
                Value::Cat(categories.len() - 1 - i.min(categories.len() - 1))
            }
            (_, v) => self.repair(v.as_f64()),
        }
    }

    fn embed_into(&self, value: &Value, out: &mut Vec<f64>) {
        match &self.kind {
            ParamKind::Continuous { lower, upper } => {
                out.push((value.as_f64() - lower) / (upper - lower))
            }
            ParamKind::Integer { lower, upper } => {
                out.push((value.as_f64() - *lower as f64) / (*upper - *lower) as f64)
            }
            ParamKind::Categorical { categories } => {
                let hot = match value {
                    Value::Cat(i) => *i,
                    other => other.as_f64() as usize,
                };
                out.extend((0..categories.len()).map(|i| if i == hot { 1.0 } else { 0.0 }));
            }
        }
    }

    /// Inverse of the embedding for a slice of `width()` coordinates.
    fn decode(&self, coords: &[f64]) -> Value {
        match &self.kind {
            ParamKind::Continuous { lower, upper } => {
                self.repair(lower + coords[0] * (upper - lower))
            }
            ParamKind::Integer { lower, upper } => {
                self.repair(*lower as f64 + coords[0] * (*upper - *lower) as f64)
            }
            ParamKind::Categorical { .. } => {
                // Strict comparison keeps the lowest index on ties.
                let mut best = 0;
                for (i, &c) in coords.iter().enumerate() {
                    if c > coords[best] {
                        best = i;
                    }
                }
                Value::Cat(best)
            }
        }
    }

    /// Category label for display and the wire protocol.
    pub fn label(&self, value: &Value) -> Option<&str> {
        match (&self.kind, value) {
            (ParamKind::Categorical { categories }, Value::Cat(i)) => {
                categories.get(*i).map(String::as_str)
            }
            _ => None,
        }
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

#[derive(Deserialize)]
struct RawSpace(Vec<ParamSpec>);

/// Ordered, non-empty list of uniquely named dimensions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "Vec<ParamSpec>")]
pub struct SearchSpace {
    params: Vec<ParamSpec>,
}

impl TryFrom<RawSpace> for SearchSpace {
    type Error = SpaceError;

    fn try_from(raw: RawSpace) -> Result<Self, SpaceError> {
        SearchSpace::new(raw.0)
    }
}

impl From<SearchSpace> for Vec<ParamSpec> {
    fn from(space: SearchSpace) -> Self {
        space.params
    }
}

impl SearchSpace {
    pub fn new(params: Vec<ParamSpec>) -> Result<Self, SpaceError> {
        if params.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut names = HashSet::new();
        for p in &params {
            if !names.insert(p.name.as_str()) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
        }
        Ok(Self { params })
    }

    /// `dim` identical continuous dimensions named `x0..x{dim-1}`.
    pub fn uniform_box(dim: usize, lower: f64, upper: f64) -> Result<Self, SpaceError> {
        let params = (0..dim)
            .map(|i| ParamSpec::continuous(format!("x{i}"), lower, upper))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(params)
    }

    pub fn params(&self) -> &[ParamSpec] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    pub fn embedded_width(&self) -> usize {
        self.params.iter().map(ParamSpec::width).sum()
    }

    pub fn validate(&self, position: &[Value]) -> Result<(), SpaceError> {
        if position.len() != self.dim() {
            return Err(SpaceError::Dimension { expected: self.dim(), got: position.len() });
        }
        for (p, v) in self.params.iter().zip(position) {
            if !p.contains(v) {
                return Err(SpaceError::InvalidValue { name: p.name.clone(), value: v.to_string() });
            }
        }
        Ok(())
    }

    /// Unit-box embedding: numeric dimensions normalised to `[0, 1]`,
    /// categoricals one-hot encoded.
    pub fn embed(&self, position: &[Value]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.embedded_width());
        for (p, v) in self.params.iter().zip(position) {
            p.embed_into(v, &mut out);
        }
        out
    }

    /// Maps an embedded vector back to a valid position. Categoricals take
    /// the arg-max coordinate (lowest index on ties).
    pub fn decode(&self, embedded: &[f64]) -> Position {
        debug_assert_eq!(embedded.len(), self.embedded_width());
        let mut offset = 0;
        self.params
            .iter()
            .map(|p| {
                let w = p.width();
                let v = p.decode(&embedded[offset..offset + w]);
                offset += w;
                v
            })
            .collect()
    }

    /// Repairs one raw real per dimension (natural units).
    pub fn repair(&self, raw: &[f64]) -> Position {
        debug_assert_eq!(raw.len(), self.dim());
        self.params.iter().zip(raw).map(|(p, &x)| p.repair(x)).collect()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Position {
        self.params.iter().map(|p| p.sample(rng)).collect()
    }

    pub fn oppose(&self, position: &[Value]) -> Position {
        self.params.iter().zip(position).map(|(p, v)| p.oppose(v)).collect()
    }

    /// True when every numeric component sits at the centre of its range
    /// and every categorical index is its own reflection.
    pub fn is_centre(&self, position: &[Value]) -> bool {
        self.oppose(position) == position
    }
}

/// A candidate hyperparameter vector with its evaluation state.
#[derive(Clone, Debug, PartialEq)]
pub struct FoodSource {
    pub position: Position,
    objective: Option<f64>,
    fitness: Option<f64>,
    /// Consecutive non-improving neighbour attempts.
    pub trials: u32,
}

impl FoodSource {
    pub fn unevaluated(position: Position) -> Self {
        Self { position, objective: None, fitness: None, trials: 0 }
    }

    /// # Panics
    /// If `objective` is not finite; evaluators reject non-finite values
    /// before they reach a food source.
    pub fn evaluated(position: Position, objective: f64) -> Self {
        let fit = fitness(objective).expect("objective values are finite");
        Self { position, objective: Some(objective), fitness: Some(fit), trials: 0 }
    }

    pub fn objective(&self) -> Option<f64> {
        self.objective
    }

    pub fn fitness(&self) -> Option<f64> {
        self.fitness
    }
}
