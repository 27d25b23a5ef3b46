//! Seeded random instances.

use crate::graph::{Arc, DirectedNetwork};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenerateError {
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("{m} arcs requested but only {max} ordered pairs exist")]
    TooManyArcs { m: usize, max: usize },
    #[error("maximum capacity must be at least 1")]
    ZeroCapacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    pub max_capacity: u64,
    pub seed: u64,
}

/// `m` distinct ordered pairs (no self-loops) chosen uniformly, integer
/// capacities uniform in `[1, max_capacity]`, source vertex 0, sink `n-1`.
pub fn random_network(p: &GenParams) -> Result<DirectedNetwork, GenerateError> {
    if p.n < 2 {
        return Err(GenerateError::TooFewVertices(p.n));
    }
    if p.max_capacity == 0 {
        return Err(GenerateError::ZeroCapacity);
    }
    let pairs = p.n * (p.n - 1);
    if p.m > pairs {
        return Err(GenerateError::TooManyArcs { m: p.m, max: pairs });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut picked = index::sample(&mut rng, pairs, p.m).into_vec();
    picked.sort_unstable();
    let arcs = picked
        .into_iter()
        .map(|k| {
            let tail = k / (p.n - 1);
            let mut head = k % (p.n - 1);
            if head >= tail {
                head += 1;
            }
            let cap = rng.gen_range(1..=p.max_capacity) as f64;
            Arc::new(tail, head, cap)
        })
        .collect();
    Ok(DirectedNetwork::new(p.n, arcs, 0, p.n - 1)
        .expect("generated arcs are in range")
        .0)
}
