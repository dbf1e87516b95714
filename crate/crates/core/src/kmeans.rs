//! Lloyd's K-Means over embedded positions, used to condense a large random
//! population into `k` representative food sources before any evaluation.

use rand::seq::index;
use rand::Rng;
use thiserror::Error;

use crate::space::{Position, SearchSpace};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KMeansError {
    #[error("cluster count must be at least 1")]
    ZeroClusters,
    #[error("cluster count {k} exceeds the number of points {points}")]
    TooManyClusters { k: usize, points: usize },
    #[error("points must all have the same width")]
    RaggedPoints,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    /// Cluster index of every input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub iterations_used: usize,
    /// Within-cluster sum of squares after each mean update.
    pub wcss_history: Vec<f64>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignments.iter().enumerate().filter(move |&(_, &c)| c == cluster).map(|(i, _)| i)
    }
}

/// Default working population for a random population of `pn`: a tenth of
/// it, never fewer than two sources.
pub fn default_k(pn: usize) -> usize {
    (pn / 10).max(2).min(pn)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

pub fn wcss(points: &[Vec<f64>], assignments: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assignments).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

fn means(points: &[Vec<f64>], assignments: &[usize], k: usize) -> Vec<Vec<f64>> {
    let width = points[0].len();
    let mut sums = vec![vec![0.0; width]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignments) {
        counts[c] += 1;
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        for v in s.iter_mut() {
            *v /= n as f64;
        }
    }
    sums
}

/// Gives every empty cluster the point farthest from its current centroid,
/// taken only from clusters that keep at least one other member.
fn fill_empty(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &c in assignments.iter() {
        counts[c] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor = None;
        let mut far = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let c = assignments[i];
            if counts[c] < 2 {
                continue;
            }
            let d = sq_dist(p, &centroids[c]);
            if d > far {
                far = d;
                donor = Some(i);
            }
        }
        // k <= n guarantees a cluster with two or more members while any is empty.
        let i = donor.expect("some cluster has a spare member");
        counts[assignments[i]] -= 1;
        assignments[i] = empty;
        counts[empty] = 1;
        centroids[empty] = points[i].clone();
    }
}

/// Clusters `points` into `k` groups. Initial centroids are `k` points
/// drawn without replacement; iteration stops once assignments repeat or
/// after `max_iters` rounds. With `k` equal to the number of points the
/// identity clustering is returned without consuming randomness.
pub fn cluster<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut R,
    max_iters: usize,
) -> Result<Clustering, KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if k > points.len() {
        return Err(KMeansError::TooManyClusters { k, points: points.len() });
    }
    let width = points[0].len();
    if points.iter().any(|p| p.len() != width) {
        return Err(KMeansError::RaggedPoints);
    }
    if k == points.len() {
        return Ok(Clustering {
            assignments: (0..k).collect(),
            centroids: points.to_vec(),
            iterations_used: 0,
            wcss_history: vec![0.0],
        });
    }

    let mut centroids: Vec<Vec<f64>> =
        index::sample(rng, points.len(), k).into_iter().map(|i| points[i].clone()).collect();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut wcss_history = Vec::new();
    let mut iterations_used = 0;

    for iter in 1..=max_iters.max(1) {
        iterations_used = iter;
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        fill_empty(points, &mut next, &mut centroids);
        if next == assignments {
            break;
        }
        assignments = next;
        centroids = means(points, &assignments, k);
        wcss_history.push(wcss(points, &assignments, &centroids));
    }

    Ok(Clustering { assignments, centroids, iterations_used, wcss_history })
}

/// Draws `pn` uniform positions, clusters their embeddings into `k`
/// groups, and returns one representative position per cluster. Nothing is
/// evaluated. A singleton cluster returns its member unchanged; larger
/// clusters return their repaired centroid.
pub fn seed_population<R: Rng + ?Sized>(
    space: &SearchSpace,
    pn: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<Position>, KMeansError> {
    if k == 0 {
        return Err(KMeansError::ZeroClusters);
    }
    if k > pn {
        return Err(KMeansError::TooManyClusters { k, points: pn });
    }
    let sampled: Vec<Position> = (0..pn).map(|_| space.sample_uniform(rng)).collect();
    let points: Vec<Vec<f64>> = sampled.iter().map(|p| space.embed(p)).collect();
    let clustering = cluster(&points, k, rng, DEFAULT_MAX_ITERS)?;
    Ok((0..k)
        .map(|j| {
            let mut members = clustering.members(j);
            match (members.next(), members.next()) {
                (Some(only), None) => sampled[only].clone(),
                _ => space.decode(&clustering.centroids[j]),
            }
        })
        .collect())
}
