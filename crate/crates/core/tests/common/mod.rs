//! Independent reference implementations used as test oracles. Everything
//! here works on dense matrices or plain sets and shares no code path with
//! the CSR kernels under test.
#![allow(dead_code)]

pub mod setups;

use std::collections::{BTreeSet, HashSet};

use gidn::diffusion::{BranchConfig, BranchOperators, HopWeighting};
use gidn::graph::{build_csr, Pair, SparseGraph};
use gidn::model::{batch_loss, InputMode, LinkBatch, LossKind, ModelConfig, ModelParams};
use gidn::FeatureMatrix;
use gidn::TransitionKind;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random simple graph with `n` nodes and edge probability `p`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> (usize, Vec<Pair>) {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Dense adjacency from an edge list.
pub fn dense_adjacency(n: usize, edges: &[Pair]) -> Array2<f64> {
    let mut a = Array2::zeros((n, n));
    for &(u, v) in edges {
        if u != v {
            a[[u, v]] = 1.0;
            a[[v, u]] = 1.0;
        }
    }
    a
}

/// `Â = A + I` normalized as requested, built densely.
pub fn dense_transition(n: usize, edges: &[Pair], kind: TransitionKind) -> Array2<f64> {
    let mut a = dense_adjacency(n, edges);
    for i in 0..n {
        a[[i, i]] = 1.0;
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum()).collect();
    match kind {
        TransitionKind::Adj => a,
        TransitionKind::Rw => Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / deg[i]),
        TransitionKind::Sym => Array2::from_shape_fn((n, n), |(i, j)| a[[i, j]] / deg[i].sqrt() / deg[j].sqrt()),
    }
}

/// `T^k X` via explicit dense matrix powers.
pub fn dense_power_diffusion(t: &Array2<f64>, x: &Array2<f64>, k: usize) -> Vec<Array2<f64>> {
    let n = t.nrows();
    let mut power = Array2::<f64>::eye(n);
    let mut out = Vec::new();
    for _ in 0..=k {
        out.push(power.dot(x));
        power = power.dot(t);
    }
    out
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn neighbor_sets(n: usize, edges: &[Pair]) -> Vec<BTreeSet<usize>> {
    let mut sets = vec![BTreeSet::new(); n];
    for &(u, v) in edges {
        if u != v {
            sets[u].insert(v);
            sets[v].insert(u);
        }
    }
    sets
}

pub fn brute_common_neighbors(sets: &[BTreeSet<usize>], u: usize, v: usize) -> usize {
    sets[u].intersection(&sets[v]).count()
}

pub fn brute_adamic_adar(sets: &[BTreeSet<usize>], u: usize, v: usize) -> f64 {
    sets[u]
        .intersection(&sets[v])
        .map(|&w| {
            let d = sets[w].len();
            if d > 1 {
                1.0 / (d as f64).ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// Solves `(I - α Pᵀ) π = (1-α) e_root` by Gaussian elimination with
/// partial pivoting. Dangling rows of `P` point back to the root.
pub fn dense_rooted_pagerank(n: usize, edges: &[Pair], root: usize, alpha: f64) -> Vec<f64> {
    let sets = neighbor_sets(n, edges);
    let mut p = Array2::<f64>::zeros((n, n));
    for u in 0..n {
        if sets[u].is_empty() {
            p[[u, root]] = 1.0;
        } else {
            for &v in &sets[u] {
                p[[u, v]] = 1.0 / sets[u].len() as f64;
            }
        }
    }
    let mut m = Array2::<f64>::eye(n) - &(p.t().to_owned() * alpha);
    let mut b = vec![0.0; n];
    b[root] = 1.0 - alpha;
    solve(&mut m, &mut b)
}

fn solve(m: &mut Array2<f64>, b: &mut [f64]) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[[i, col]].abs().total_cmp(&m[[j, col]].abs()))
            .unwrap();
        if piv != col {
            for c in 0..n {
                let tmp = m[[col, c]];
                m[[col, c]] = m[[piv, c]];
                m[[piv, c]] = tmp;
            }
            b.swap(col, piv);
        }
        for r in col + 1..n {
            let f = m[[r, col]] / m[[col, col]];
            if f != 0.0 {
                for c in col..n {
                    m[[r, c]] -= f * m[[col, c]];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[[r, c]] * x[c]).sum();
        x[r] = (b[r] - s) / m[[r, r]];
    }
    x
}

/// Naive SimRank: four nested loops per sweep.
pub fn naive_simrank(n: usize, edges: &[Pair], c: f64, iters: usize) -> Vec<Vec<f64>> {
    let sets: Vec<Vec<usize>> = neighbor_sets(n, edges)
        .into_iter()
        .map(|s| s.into_iter().collect())
        .collect();
    let mut s = vec![vec![0.0; n]; n];
    for (i, row) in s.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..iters {
        let mut next = vec![vec![0.0; n]; n];
        for u in 0..n {
            for v in 0..n {
                if u == v {
                    next[u][v] = 1.0;
                    continue;
                }
                if sets[u].is_empty() || sets[v].is_empty() {
                    continue;
                }
                let mut sum = 0.0;
                for &a in &sets[u] {
                    for &b in &sets[v] {
                        sum += s[a][b];
                    }
                }
                next[u][v] = c * sum / (sets[u].len() * sets[v].len()) as f64;
            }
        }
        s = next;
    }
    s
}

/// Hits@K by fully sorting negatives descending.
pub fn sort_hits(pos: &[f64], neg: &[f64], k: usize) -> f64 {
    if k >= neg.len() {
        return 1.0;
    }
    let mut sorted = neg.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let t = sorted[k - 1];
    pos.iter().filter(|&&p| p > t).count() as f64 / pos.len() as f64
}

/// MRR by sorting each positive together with its negatives.
pub fn sort_mrr(pos: &[f64], negs: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (p, ns) in pos.iter().zip(negs) {
        // positive placed after every equal negative
        let mut items: Vec<(f64, u8)> = ns.iter().map(|&x| (x, 0)).collect();
        items.push((*p, 1));
        items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let rank = items.iter().position(|it| it.1 == 1).unwrap() + 1;
        total += 1.0 / rank as f64;
    }
    total / pos.len() as f64
}

pub fn pairwise_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for &p in pos {
        for &n in neg {
            if p > n {
                s += 1.0;
            } else if p == n {
                s += 0.5;
            }
        }
    }
    s / (pos.len() * neg.len()) as f64
}

/// A small random model instance for gradient checks.
pub struct Instance {
    pub graph: SparseGraph,
    pub features: Option<FeatureMatrix>,
    pub config: ModelConfig,
    pub batch: LinkBatch,
}

pub fn random_instance(seed: u64, loss: LossKind, hop_weights: HopWeighting, input: InputMode) -> Instance {
    let mut r = rng(seed);
    let n = r.random_range(6..=12);
    let (_, edges) = random_graph(&mut r, n, 0.35);
    let graph = build_csr(n, &edges).unwrap();
    let kinds = [TransitionKind::Sym, TransitionKind::Rw, TransitionKind::Adj];
    let n_branches = r.random_range(1..=2);
    let branches = (0..n_branches)
        .map(|_| {
            BranchConfig::new(
                kinds[r.random_range(0..3)],
                r.random_range(0..=2),
                r.random_range(1..=3),
            )
        })
        .collect();
    let feature_dim = r.random_range(1..=4);
    let features = match input {
        InputMode::Embeddings => None,
        _ => Some(random_matrix(&mut r, n, feature_dim)),
    };
    let config = ModelConfig {
        num_nodes: n,
        branches,
        hop_weights,
        input,
        feature_dim: if features.is_some() { feature_dim } else { 0 },
        embedding_dim: r.random_range(1..=4),
        hidden: r.random_range(2..=5),
        loss,
    };
    let mut pairs = || {
        let u = r.random_range(0..n);
        let mut v = r.random_range(0..n);
        while v == u {
            v = r.random_range(0..n);
        }
        (u, v)
    };
    let pos: Vec<Pair> = (0..3).map(|_| pairs()).collect();
    let neg: Vec<Pair> = (0..6).map(|_| pairs()).collect();
    Instance {
        graph,
        features,
        config,
        batch: LinkBatch::new(pos, neg).unwrap(),
    }
}

/// Perturbs parameters so hop logits and biases are not at symmetric
/// starting values.
pub fn jitter(params: &mut ModelParams, seed: u64) {
    let mut r = rng(seed);
    for (_, g) in params.groups_mut() {
        for x in g.iter_mut() {
            *x += r.random_range(-0.5..0.5);
        }
    }
}

/// Central finite differences of the batch loss for every scalar parameter.
pub fn finite_difference_gradients(inst: &Instance, params: &ModelParams, h: f64) -> Vec<(String, Vec<f64>)> {
    let ops = BranchOperators::new(&inst.graph, &inst.config.branches).unwrap();
    let loss = |p: &ModelParams| batch_loss(&ops, &inst.config, inst.features.as_ref(), p, &inst.batch).unwrap();
    let names: Vec<(String, usize)> = params.groups().into_iter().map(|(n, g, _)| (n, g.len())).collect();
    let mut out = Vec::new();
    for (gi, (name, len)) in names.into_iter().enumerate() {
        let mut grads = Vec::with_capacity(len);
        for i in 0..len {
            let mut plus = params.clone();
            plus.groups_mut()[gi].1[i] += h;
            let mut minus = params.clone();
            minus.groups_mut()[gi].1[i] -= h;
            grads.push((loss(&plus) - loss(&minus)) / (2.0 * h));
        }
        out.push((name, grads));
    }
    out
}

/// `‖a - b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(floor)
}

pub fn unordered_set(pairs: &[Pair]) -> HashSet<Pair> {
    pairs.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect()
}

pub fn all_kinds() -> [TransitionKind; 3] {
    [TransitionKind::Rw, TransitionKind::Sym, TransitionKind::Adj]
}
