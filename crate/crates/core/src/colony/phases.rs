//! Neighbour moves and selection probabilities shared by all variants.

use rand::Rng;

use super::Variant;
use crate::space::{FoodSource, ParamKind, Position, SearchSpace, Value};

/// Moves dimension `dim` of `current` relative to `partner` with step
/// factor `phi`; every other dimension is copied. Numeric dimensions use
/// `x + phi * (x - partner)` followed by repair. Categorical dimensions
/// take the partner's category when `adopt` is set and keep their own
/// otherwise.
pub fn move_dimension(
    space: &SearchSpace,
    current: &[Value],
    partner: &[Value],
    dim: usize,
    phi: f64,
    adopt: bool,
) -> Position {
    let mut next = current.to_vec();
    let spec = &space.params()[dim];
    next[dim] = match spec.kind() {
        ParamKind::Categorical { .. } => {
            if adopt {
                partner[dim]
            } else {
                current[dim]
            }
        }
        _ => {
            let x = current[dim].as_f64();
            let moved = x + phi * (x - partner[dim].as_f64());
            // Keep the incumbent bit-for-bit when the step is zero.
            if moved == x {
                current[dim]
            } else {
                spec.repair(moved)
            }
        }
    };
    next
}

/// Random neighbour of source `i`: one uniformly chosen dimension moved
/// towards or away from a uniformly chosen partner `k != i`.
///
/// # Panics
/// If fewer than two sources are present.
pub fn neighbor_move<R: Rng + ?Sized>(
    i: usize,
    sources: &[FoodSource],
    space: &SearchSpace,
    rng: &mut R,
) -> Position {
    assert!(sources.len() >= 2, "neighbour moves need at least two sources");
    let dim = rng.random_range(0..space.dim());
    let mut partner = rng.random_range(0..sources.len() - 1);
    if partner >= i {
        partner += 1;
    }
    let (phi, adopt) = if space.params()[dim].is_categorical() {
        (0.0, rng.random_bool(0.5))
    } else {
        (rng.random_range(-1.0..=1.0), false)
    };
    move_dimension(space, &sources[i].position, &sources[partner].position, dim, phi, adopt)
}

/// Onlooker selection probability for every source.
///
/// `Abc` uses `0.9 * fit / max(fit) + 0.1`. The other variants min-max
/// normalise fitness into `[0, 1]`; when all fitness values are equal every
/// source gets probability 1.
pub fn selection_probabilities(sources: &[FoodSource], variant: Variant) -> Vec<f64> {
    let fit: Vec<f64> = sources
        .iter()
        .map(|s| s.fitness().expect("sources are evaluated before onlookers run"))
        .collect();
    probabilities_from_fitness(&fit, variant)
}

pub fn probabilities_from_fitness(fit: &[f64], variant: Variant) -> Vec<f64> {
    let max = fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = fit.iter().copied().fold(f64::INFINITY, f64::min);
    match variant {
        Variant::Abc => fit.iter().map(|f| 0.9 * f / max + 0.1).collect(),
        Variant::HypAbc | Variant::OptAbc => {
            if max == min {
                vec![1.0; fit.len()]
            } else {
                fit.iter().map(|f| (f - min) / (max - min)).collect()
            }
        }
    }
}
