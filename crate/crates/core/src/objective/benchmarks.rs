use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{EvalError, Objective};
use crate::space::Value;

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Sphere,
    Rastrigin,
    Rosenbrock,
    /// Sphere plus seeded Gaussian noise.
    NoisySphere,
}

impl Benchmark {
    pub const ALL: [Benchmark; 4] =
        [Benchmark::Sphere, Benchmark::Rastrigin, Benchmark::Rosenbrock, Benchmark::NoisySphere];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Sphere => "sphere",
            Benchmark::Rastrigin => "rastrigin",
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::NoisySphere => "noisy-sphere",
        }
    }

    /// Conventional search box for the function.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            Benchmark::Rosenbrock => (-2.048, 2.048),
            _ => (-5.12, 5.12),
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            Benchmark::Sphere | Benchmark::NoisySphere => sphere(x),
            Benchmark::Rastrigin => rastrigin(x),
            Benchmark::Rosenbrock => rosenbrock(x),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Benchmark::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown benchmark `{s}` (expected sphere, rastrigin, rosenbrock or noisy-sphere)"))
    }
}

/// In-process benchmark evaluator.
pub struct BuiltinObjective {
    function: Benchmark,
    noise: Option<(Normal<f64>, ChaCha8Rng)>,
}

impl BuiltinObjective {
    pub fn new(function: Benchmark, noise_sigma: f64, noise_seed: u64) -> Self {
        let noise = (function == Benchmark::NoisySphere).then(|| {
            let normal = Normal::new(0.0, noise_sigma.abs()).expect("finite sigma");
            (normal, ChaCha8Rng::seed_from_u64(noise_seed))
        });
        Self { function, noise }
    }
}

impl Objective for BuiltinObjective {
    fn evaluate(&mut self, position: &[Value]) -> Result<f64, EvalError> {
        let x: Vec<f64> = position.iter().map(Value::as_f64).collect();
        let mut f = self.function.value(&x);
        if let Some((normal, rng)) = &mut self.noise {
            f += normal.sample(rng);
        }
        Ok(f)
    }
}
