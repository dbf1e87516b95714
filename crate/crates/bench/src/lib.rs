//! Shared fixtures for the criterion benchmarks.

use optabc_core::space::{ParamSpec, Position, SearchSpace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A mixed space shaped like a small tree-ensemble tuning problem.
pub fn forest_space() -> SearchSpace {
    SearchSpace::new(vec![
        ParamSpec::integer("n_estimators", 10, 500).unwrap(),
        ParamSpec::integer("max_depth", 2, 40).unwrap(),
        ParamSpec::integer("min_samples_split", 2, 20).unwrap(),
        ParamSpec::continuous("max_features", 0.1, 1.0).unwrap(),
        ParamSpec::categorical("criterion", ["gini", "entropy", "log_loss"]).unwrap(),
    ])
    .unwrap()
}

/// `n` embedded uniform samples from `space`.
pub fn embedded_points(space: &SearchSpace, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p: Position = space.sample_uniform(&mut rng);
            space.embed(&p)
        })
        .collect()
}
