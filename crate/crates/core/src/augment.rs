//! Training-time structural augmentation and negative sampling.
//!
//! Node labels do not exist in link prediction, so "connect same-label
//! nodes" becomes "connect nodes that co-occur often on random walks" and
//! "cut different-label edges" becomes uniform edge dropout.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{build_csr, Pair, SparseGraph};

/// Maximum rejected draws per negative slot.
pub const MAX_NEGATIVE_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkSet {
    pub walks: Vec<Vec<usize>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl WalkSet {
    /// One walk per line, space-separated ids.
    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for w in &self.walks {
            let line: Vec<String> = w.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// RNG for work owned by `index` under a run seed.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform random walks, `walks_per_node` from every node in id order.
///
/// Each start node draws from its own RNG stream, so the output does not
/// depend on how nodes are scheduled across threads.
pub fn sample_walks(graph: &SparseGraph, walk_length: usize, walks_per_node: usize, seed: u64) -> Result<WalkSet> {
    if walk_length == 0 {
        return Err(Error::Config("walk_length must be >= 1".into()));
    }
    let per_node: Vec<Vec<Vec<usize>>> = (0..graph.num_nodes())
        .into_par_iter()
        .map(|start| {
            let mut rng = stream_rng(seed, start as u64);
            (0..walks_per_node)
                .map(|_| {
                    let mut walk = Vec::with_capacity(walk_length);
                    walk.push(start);
                    let mut cur = start;
                    while walk.len() < walk_length {
                        let nbrs = graph.neighbors(cur);
                        if nbrs.is_empty() {
                            break;
                        }
                        cur = nbrs[rng.random_range(0..nbrs.len())];
                        walk.push(cur);
                    }
                    walk
                })
                .collect()
        })
        .collect();
    Ok(WalkSet {
        walks: per_node.into_iter().flatten().collect(),
        walk_length,
        walks_per_node,
        seed,
    })
}

/// Symmetric co-occurrence counts of node pairs at most `window` steps apart.
pub fn cooccurrence_counts(walks: &WalkSet, window: usize) -> BTreeMap<Pair, usize> {
    let mut counts = BTreeMap::new();
    for walk in &walks.walks {
        for i in 0..walk.len() {
            for j in i + 1..walk.len().min(i + window + 1) {
                let (a, b) = (walk[i], walk[j]);
                if a != b {
                    *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                }
            }
        }
    }
    counts
}

/// Non-edges `(u, v)`, `u < v`, that co-occur at least `tau` times within
/// `window` positions. Sorted, so independent of walk order.
pub fn cooccurrence_augment(graph: &SparseGraph, walks: &WalkSet, window: usize, tau: usize) -> Result<Vec<Pair>> {
    if window == 0 || tau == 0 {
        return Err(Error::Config("window and tau must be >= 1".into()));
    }
    Ok(cooccurrence_counts(walks, window)
        .into_iter()
        .filter(|&((u, v), c)| c >= tau && !graph.has_edge(u, v))
        .map(|(p, _)| p)
        .collect())
}

/// A base graph with edges added and removed. Pairs are stored as `u < v`.
#[derive(Debug, Clone)]
pub struct AugmentedGraphView<'a> {
    pub base: &'a SparseGraph,
    pub added_edges: Vec<Pair>,
    pub dropped_edges: Vec<Pair>,
}

impl<'a> AugmentedGraphView<'a> {
    pub fn new(base: &'a SparseGraph) -> Self {
        AugmentedGraphView {
            base,
            added_edges: Vec::new(),
            dropped_edges: Vec::new(),
        }
    }

    /// Adds pairs that are neither base edges nor already dropped.
    pub fn add_edges(&mut self, pairs: &[Pair]) {
        let dropped: HashSet<Pair> = self.dropped_edges.iter().copied().collect();
        let mut present: HashSet<Pair> = self.added_edges.iter().copied().collect();
        for &(u, v) in pairs {
            let key = (u.min(v), u.max(v));
            if u != v && !self.base.has_edge(u, v) && !dropped.contains(&key) && present.insert(key) {
                self.added_edges.push(key);
            }
        }
    }

    /// `(base ∖ dropped) ∪ added` as a fresh CSR graph.
    pub fn effective_graph(&self) -> SparseGraph {
        let dropped: HashSet<Pair> = self.dropped_edges.iter().copied().collect();
        let mut edges: Vec<Pair> = self.base.edges().into_iter().filter(|p| !dropped.contains(p)).collect();
        edges.extend_from_slice(&self.added_edges);
        build_csr(self.base.num_nodes(), &edges).expect("ids come from the base graph")
    }
}

/// Drops each undirected edge independently with probability `p`.
pub fn edge_dropout(graph: &SparseGraph, p: f64, seed: u64) -> Result<AugmentedGraphView<'_>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Config(format!("dropout probability {p} not in [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dropped = graph.edges().into_iter().filter(|_| rng.random::<f64>() < p).collect();
    Ok(AugmentedGraphView {
        base: graph,
        added_edges: Vec::new(),
        dropped_edges: dropped,
    })
}

/// `Q` corrupted-tail negatives `(u, v')` per positive `(u, v)`, in positive
/// order. A draw is rejected when `v' = u`, `(u, v')` is an edge, a
/// positive, or in `exclude` (unordered).
pub fn sample_negatives(
    graph: &SparseGraph,
    pos_pairs: &[Pair],
    q: usize,
    seed: u64,
    exclude: &HashSet<Pair>,
) -> Result<Vec<Pair>> {
    if q == 0 {
        return Err(Error::Config("negatives per positive must be >= 1".into()));
    }
    let n = graph.num_nodes();
    let positives: HashSet<Pair> = pos_pairs.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(pos_pairs.len() * q);
    for &(u, _) in pos_pairs {
        graph.check_node(u)?;
        for _ in 0..q {
            let mut found = None;
            for _ in 0..MAX_NEGATIVE_REJECTIONS {
                let cand = rng.random_range(0..n);
                let key = (u.min(cand), u.max(cand));
                if cand != u && !graph.has_edge(u, cand) && !positives.contains(&key) && !exclude.contains(&key) {
                    found = Some(cand);
                    break;
                }
            }
            let v = found.ok_or_else(|| {
                Error::Data(format!(
                    "no negative found for node {u} after {MAX_NEGATIVE_REJECTIONS} draws; graph too dense"
                ))
            })?;
            out.push((u, v));
        }
    }
    Ok(out)
}
