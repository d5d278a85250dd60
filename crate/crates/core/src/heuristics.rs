//! Classical neighborhood-similarity baselines.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Pair, SparseGraph};

/// Default node cap for the dense SimRank table.
pub const SIMRANK_NODE_CAP: usize = 2000;
pub const PAGERANK_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeuristicKind {
    CommonNeighbors,
    AdamicAdar,
    /// `alpha` is the walk-continuation probability; restart is `1 - alpha`.
    RootedPageRank {
        alpha: f64,
    },
    SimRank {
        c: f64,
        iters: usize,
    },
}

impl HeuristicKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            HeuristicKind::RootedPageRank { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(Error::Config(format!("rooted PageRank alpha {alpha} not in (0, 1)")))
            }
            HeuristicKind::SimRank { c, .. } if !(c > 0.0 && c < 1.0) => {
                Err(Error::Config(format!("SimRank decay {c} not in (0, 1)")))
            }
            HeuristicKind::SimRank { iters: 0, .. } => Err(Error::Config("SimRank needs iters >= 1".into())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeuristicKind::CommonNeighbors => f.write_str("cn"),
            HeuristicKind::AdamicAdar => f.write_str("aa"),
            HeuristicKind::RootedPageRank { alpha } => write!(f, "rpr(alpha={alpha})"),
            HeuristicKind::SimRank { c, iters } => write!(f, "simrank(c={c}, iters={iters})"),
        }
    }
}

/// Parses `cn`, `aa`, `rpr` / `rpr:0.85`, `simrank` / `simrank:0.8:5`.
impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default().to_ascii_lowercase();
        let mut num = |default: f64| -> Result<f64> {
            match parts.next() {
                Some(p) => p
                    .parse()
                    .map_err(|_| Error::Config(format!("bad heuristic parameter {p:?} in {s:?}"))),
                None => Ok(default),
            }
        };
        let kind = match head.as_str() {
            "cn" | "common_neighbors" => HeuristicKind::CommonNeighbors,
            "aa" | "adamic_adar" => HeuristicKind::AdamicAdar,
            "rpr" | "rooted_pagerank" => HeuristicKind::RootedPageRank { alpha: num(0.85)? },
            "simrank" => {
                let c = num(0.8)?;
                let iters = num(5.0)?;
                if iters.fract() != 0.0 || iters < 0.0 {
                    return Err(Error::Config(format!("bad SimRank iteration count in {s:?}")));
                }
                HeuristicKind::SimRank {
                    c,
                    iters: iters as usize,
                }
            }
            other => return Err(Error::Config(format!("unknown heuristic {other:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

fn check_pair(graph: &SparseGraph, u: usize, v: usize) -> Result<()> {
    graph.check_node(u)?;
    graph.check_node(v)
}

/// Calls `f` for every common neighbor, merging the sorted rows.
fn for_each_common(graph: &SparseGraph, u: usize, v: usize, mut f: impl FnMut(usize)) {
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

pub fn common_neighbors(graph: &SparseGraph, u: usize, v: usize) -> Result<usize> {
    check_pair(graph, u, v)?;
    let mut count = 0;
    for_each_common(graph, u, v, |_| count += 1);
    Ok(count)
}

/// `Σ 1/ln(deg w)` over common neighbors; degree ≤ 1 contributes 0.
pub fn adamic_adar(graph: &SparseGraph, u: usize, v: usize) -> Result<f64> {
    check_pair(graph, u, v)?;
    let mut score = 0.0;
    for_each_common(graph, u, v, |w| {
        let d = graph.degree(w);
        if d > 1 {
            score += 1.0 / (d as f64).ln();
        }
    });
    Ok(score)
}

/// Stationary distribution of a walk that continues along a uniform edge
/// with probability `alpha` and jumps back to `root` otherwise. Mass at a
/// dangling node also returns to `root`.
pub fn rooted_pagerank(graph: &SparseGraph, root: usize, alpha: f64, tol: f64) -> Result<Vec<f64>> {
    graph.check_node(root)?;
    HeuristicKind::RootedPageRank { alpha }.validate()?;
    let n = graph.num_nodes();
    let mut pi = vec![0.0; n];
    pi[root] = 1.0;
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITERS {
        next.fill(0.0);
        let mut to_root = 1.0 - alpha;
        for (u, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let nbrs = graph.neighbors(u);
            if nbrs.is_empty() {
                to_root += alpha * mass;
            } else {
                let share = alpha * mass / nbrs.len() as f64;
                for &v in nbrs {
                    next[v] += share;
                }
            }
        }
        next[root] += to_root;
        let diff: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            return Ok(pi);
        }
    }
    Err(Error::Numeric(format!(
        "rooted PageRank from {root} did not converge in {PAGERANK_MAX_ITERS} iterations"
    )))
}

/// Dense all-pairs SimRank table.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRankScores {
    n: usize,
    table: Vec<f64>,
}

impl SimRankScores {
    pub fn score(&self, u: usize, v: usize) -> Result<f64> {
        for id in [u, v] {
            if id >= self.n {
                return Err(Error::NodeOutOfRange { id, num_nodes: self.n });
            }
        }
        Ok(self.table[u * self.n + v])
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }
}

pub fn simrank(graph: &SparseGraph, c: f64, iters: usize) -> Result<SimRankScores> {
    simrank_capped(graph, c, iters, SIMRANK_NODE_CAP)
}

/// `iters` Jacobi sweeps of
/// `s(u,v) ← c/(deg u·deg v) Σ_{a∈Γ(u)} Σ_{b∈Γ(v)} s(a,b)`, `s(u,u) = 1`.
pub fn simrank_capped(graph: &SparseGraph, c: f64, iters: usize, node_cap: usize) -> Result<SimRankScores> {
    HeuristicKind::SimRank { c, iters }.validate()?;
    let n = graph.num_nodes();
    if n > node_cap {
        return Err(Error::Config(format!(
            "SimRank is limited to {node_cap} nodes, graph has {n}"
        )));
    }
    let mut s = vec![0.0; n * n];
    for u in 0..n {
        s[u * n + u] = 1.0;
    }
    // partial[a*n + v] = Σ_{b∈Γ(v)} s(a, b)
    let mut partial = vec![0.0; n * n];
    let mut next = vec![0.0; n * n];
    for _ in 0..iters {
        for a in 0..n {
            let row = &s[a * n..(a + 1) * n];
            for v in 0..n {
                partial[a * n + v] = graph.neighbors(v).iter().map(|&b| row[b]).sum();
            }
        }
        for u in 0..n {
            let du = graph.degree(u);
            for v in 0..n {
                next[u * n + v] = if u == v {
                    1.0
                } else {
                    let dv = graph.degree(v);
                    if du == 0 || dv == 0 {
                        0.0
                    } else {
                        let sum: f64 = graph.neighbors(u).iter().map(|&a| partial[a * n + v]).sum();
                        c * sum / (du * dv) as f64
                    }
                };
            }
        }
        std::mem::swap(&mut s, &mut next);
    }
    Ok(SimRankScores { n, table: s })
}

/// Scores a list of pairs with one heuristic.
///
/// Rooted PageRank pair scores are symmetrized: `π_u(v) + π_v(u)`, with
/// per-root vectors cached across pairs.
pub fn score_pairs(graph: &SparseGraph, kind: HeuristicKind, pairs: &[Pair]) -> Result<Vec<f64>> {
    kind.validate()?;
    match kind {
        HeuristicKind::CommonNeighbors => pairs
            .iter()
            .map(|&(u, v)| common_neighbors(graph, u, v).map(|c| c as f64))
            .collect(),
        HeuristicKind::AdamicAdar => pairs.iter().map(|&(u, v)| adamic_adar(graph, u, v)).collect(),
        HeuristicKind::RootedPageRank { alpha } => {
            let mut cache: HashMap<usize, Vec<f64>> = HashMap::new();
            let mut out = Vec::with_capacity(pairs.len());
            for &(u, v) in pairs {
                check_pair(graph, u, v)?;
                for root in [u, v] {
                    if let std::collections::hash_map::Entry::Vacant(slot) = cache.entry(root) {
                        slot.insert(rooted_pagerank(graph, root, alpha, 1e-12)?);
                    }
                }
                out.push(cache[&u][v] + cache[&v][u]);
            }
            Ok(out)
        }
        HeuristicKind::SimRank { c, iters } => {
            let table = simrank(graph, c, iters)?;
            pairs.iter().map(|&(u, v)| table.score(u, v)).collect()
        }
    }
}
