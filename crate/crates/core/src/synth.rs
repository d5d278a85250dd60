//! Synthetic graphs with planted structure, and random edge splits.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{DatasetSplits, Pair};

/// `count` disjoint cliques of `size` nodes, consecutive cliques joined by
/// one bridge edge between their first nodes.
pub fn planted_cliques(count: usize, size: usize) -> (usize, Vec<Pair>) {
    let mut edges = Vec::new();
    for c in 0..count {
        let base = c * size;
        for i in 0..size {
            for j in i + 1..size {
                edges.push((base + i, base + j));
            }
        }
        if c + 1 < count {
            edges.push((base, base + size));
        }
    }
    (count * size, edges)
}

/// Stochastic block model with equal blocks; node `i` is in block `i / block_size`.
pub fn stochastic_block_model(
    blocks: usize,
    block_size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> (usize, Vec<Pair>) {
    let n = blocks * block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if u / block_size == v / block_size { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

/// Erdős–Rényi `G(n, p)`.
pub fn gnp(n: usize, p: f64, seed: u64) -> (usize, Vec<Pair>) {
    stochastic_block_model(1, n, p, 0.0, seed)
}

/// Shuffles unique undirected edges and holds out the given fractions as
/// validation and test positives. Negatives are left to be sampled.
pub fn random_split(
    num_nodes: usize,
    edges: &[Pair],
    valid_frac: f64,
    test_frac: f64,
    seed: u64,
) -> Result<DatasetSplits> {
    if !(0.0..=1.0).contains(&valid_frac) || !(0.0..=1.0).contains(&test_frac) || valid_frac + test_frac >= 1.0 {
        return Err(Error::Config(format!(
            "held-out fractions {valid_frac} + {test_frac} must be in [0, 1)"
        )));
    }
    let mut seen = HashSet::new();
    let mut unique: Vec<Pair> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .map(|&(u, v)| (u.min(v), u.max(v)))
        .filter(|p| seen.insert(*p))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    unique.shuffle(&mut rng);
    let n_valid = (unique.len() as f64 * valid_frac).round() as usize;
    let n_test = (unique.len() as f64 * test_frac).round() as usize;
    let test = unique.split_off(unique.len() - n_test);
    let valid = unique.split_off(unique.len() - n_valid);
    let splits = DatasetSplits {
        num_nodes,
        train_edges: unique,
        valid_edges: valid,
        test_edges: test,
        valid_negatives: None,
        test_negatives: None,
    };
    splits.validate()?;
    Ok(splits)
}
