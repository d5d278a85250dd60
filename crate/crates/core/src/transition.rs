//! Normalized diffusion operators over a [`SparseGraph`].
//!
//! Every operator works on the self-looped adjacency `Â = A + w·I` with
//! `D̂` its row sums. Values are stored on an augmented CSR layout that has
//! exactly one self-loop entry per row.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    /// Row-stochastic `D̂⁻¹Â`.
    Rw,
    /// Symmetric `D̂^(-1/2) Â D̂^(-1/2)`.
    Sym,
    /// Raw `Â`.
    Adj,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::Rw => "rw",
            TransitionKind::Sym => "sym",
            TransitionKind::Adj => "adj",
        })
    }
}

impl FromStr for TransitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rw" => Ok(TransitionKind::Rw),
            "sym" => Ok(TransitionKind::Sym),
            "adj" => Ok(TransitionKind::Adj),
            other => Err(Error::Config(format!("unknown transition kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    kind: TransitionKind,
    num_nodes: usize,
    self_loop_weight: f64,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    /// `values_t[p]` for entry `(i, j)` holds `T[j, i]`.
    values_t: Vec<f64>,
}

pub fn build_transition(graph: &SparseGraph, kind: TransitionKind) -> TransitionMatrix {
    TransitionMatrix::with_self_loop_weight(graph, kind, 1.0)
}

impl TransitionMatrix {
    pub fn with_self_loop_weight(graph: &SparseGraph, kind: TransitionKind, self_loop_weight: f64) -> Self {
        let n = graph.num_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut cols = Vec::with_capacity(graph.num_arcs() + n);
        for u in 0..n {
            let row = graph.neighbors(u);
            let split = row.partition_point(|&v| v < u);
            cols.extend_from_slice(&row[..split]);
            cols.push(u);
            cols.extend_from_slice(&row[split..]);
            offsets.push(cols.len());
        }

        let row_sum: Vec<f64> = (0..n).map(|u| graph.degree(u) as f64 + self_loop_weight).collect();
        let inv_sqrt: Vec<f64> = row_sum.iter().map(|d| 1.0 / d.sqrt()).collect();

        let mut values = Vec::with_capacity(cols.len());
        for u in 0..n {
            for &v in &cols[offsets[u]..offsets[u + 1]] {
                let a = if u == v { self_loop_weight } else { 1.0 };
                values.push(match kind {
                    TransitionKind::Adj => a,
                    TransitionKind::Rw => a / row_sum[u],
                    TransitionKind::Sym => a * inv_sqrt[u] * inv_sqrt[v],
                });
            }
        }

        let values_t = match kind {
            TransitionKind::Rw => {
                let mut vt = Vec::with_capacity(values.len());
                for u in 0..n {
                    for &v in &cols[offsets[u]..offsets[u + 1]] {
                        let row_v = &cols[offsets[v]..offsets[v + 1]];
                        let pos = row_v.binary_search(&u).expect("symmetric structure");
                        vt.push(values[offsets[v] + pos]);
                    }
                }
                vt
            }
            TransitionKind::Sym | TransitionKind::Adj => values.clone(),
        };

        TransitionMatrix {
            kind,
            num_nodes: n,
            self_loop_weight,
            offsets,
            cols,
            values,
            values_t,
        }
    }

    pub fn kind(&self) -> TransitionKind {
        self.kind
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn self_loop_weight(&self) -> f64 {
        self.self_loop_weight
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices of row `u`, self-loop included.
    pub fn row_cols(&self, u: usize) -> &[usize] {
        &self.cols[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn row_values(&self, u: usize) -> &[f64] {
        &self.values[self.offsets[u]..self.offsets[u + 1]]
    }

    /// `T[u, v]`, zero when not stored.
    pub fn value(&self, u: usize, v: usize) -> f64 {
        match self.row_cols(u).binary_search(&v) {
            Ok(p) => self.values[self.offsets[u] + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.num_nodes, self.num_nodes));
        for u in 0..self.num_nodes {
            for (&v, &x) in self.row_cols(u).iter().zip(self.row_values(u)) {
                out[[u, v]] = x;
            }
        }
        out
    }

    /// `T · X`.
    pub fn matmul(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.spmm(&self.values, x)
    }

    /// `Tᵀ · X`.
    pub fn matmul_transpose(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.spmm(&self.values_t, x)
    }

    // Each output row is accumulated in CSR order, so the result does not
    // depend on how rows are scheduled.
    fn spmm(&self, values: &[f64], x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.nrows() != self.num_nodes {
            return Err(Error::Shape(format!(
                "operator has {} rows, input has {}",
                self.num_nodes,
                x.nrows()
            )));
        }
        let dim = x.ncols();
        let x = x.as_standard_layout();
        let xs = x.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.num_nodes * dim];
        for (u, out_row) in out.chunks_mut(dim.max(1)).enumerate().take(self.num_nodes) {
            let lo = self.offsets[u];
            let hi = self.offsets[u + 1];
            for p in lo..hi {
                let w = values[p];
                let src = &xs[self.cols[p] * dim..(self.cols[p] + 1) * dim];
                for (o, s) in out_row.iter_mut().zip(src) {
                    *o += w * s;
                }
            }
        }
        Ok(Array2::from_shape_vec((self.num_nodes, dim), out).expect("shape"))
    }
}
