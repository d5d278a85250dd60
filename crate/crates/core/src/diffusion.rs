//! Multi-hop graph diffusion and the inception branch bank.
//!
//! A branch projects node inputs with its own weight matrix, diffuses them
//! `K` hops through its transition operator, and mixes the hops with
//! softmax-normalized learnable coefficients. Branch outputs are
//! concatenated column-wise.

use ndarray::{s, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, SparseGraph};
use crate::model::ModelParams;
use crate::transition::{build_transition, TransitionKind, TransitionMatrix};

/// Per-hop feature matrices `H(0..=K)` with `H(k) = T·H(k-1)`.
///
/// Row `n` of every hop, read in order, is node `n`'s proximity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionStack {
    pub hops: Vec<Array2<f64>>,
}

impl DiffusionStack {
    /// Maximum hop `K`.
    pub fn depth(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.hops[0].ncols()
    }

    /// `(K+1) × dim` matrix of node `n`'s hop rows.
    pub fn node_profile(&self, n: usize) -> Array2<f64> {
        let mut out = Array2::zeros((self.hops.len(), self.dim()));
        for (k, h) in self.hops.iter().enumerate() {
            out.row_mut(k).assign(&h.row(n));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub kind: TransitionKind,
    pub depth: usize,
    pub out_dim: usize,
}

impl BranchConfig {
    pub fn new(kind: TransitionKind, depth: usize, out_dim: usize) -> Self {
        BranchConfig { kind, depth, out_dim }
    }

    /// Three equal-width branches: (SYM, 1), (SYM, 2), (RW, 3).
    pub fn default_bank(width: usize) -> Vec<BranchConfig> {
        vec![
            BranchConfig::new(TransitionKind::Sym, 1, width),
            BranchConfig::new(TransitionKind::Sym, 2, width),
            BranchConfig::new(TransitionKind::Rw, 3, width),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_dim == 0 {
            return Err(Error::Config("branch out_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Granularity of the learnable hop coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HopWeighting {
    /// One logit per hop, shared by all channels.
    #[default]
    Scalar,
    /// One logit per (hop, channel).
    Channel,
}

/// Runs `K` sparse-times-dense products; `T^k` is never formed.
pub fn diffuse(t: &TransitionMatrix, x: ArrayView2<f64>, k: usize) -> Result<DiffusionStack> {
    if x.nrows() != t.num_nodes() {
        return Err(Error::Shape(format!(
            "features have {} rows, graph has {} nodes",
            x.nrows(),
            t.num_nodes()
        )));
    }
    let mut hops = Vec::with_capacity(k + 1);
    hops.push(x.to_owned());
    for _ in 0..k {
        let next = t.matmul(hops.last().unwrap().view())?;
        hops.push(next);
    }
    Ok(DiffusionStack { hops })
}

/// Reverse of [`diffuse`]: returns `Σ_k (Tᵀ)^k G(k)` via `g ← Tᵀg + G(k)`.
pub fn diffuse_backward(t: &TransitionMatrix, grad_per_hop: &[Array2<f64>]) -> Result<Array2<f64>> {
    let (last, rest) = grad_per_hop
        .split_last()
        .ok_or_else(|| Error::Shape("no hop gradients".into()))?;
    let shape = last.dim();
    if shape.0 != t.num_nodes() || grad_per_hop.iter().any(|g| g.dim() != shape) {
        return Err(Error::Shape("hop gradients must share the forward stack shape".into()));
    }
    let mut g = last.clone();
    for gk in rest.iter().rev() {
        g = t.matmul_transpose(g.view())?;
        g += gk;
    }
    Ok(g)
}

/// Softmax over the hop axis (axis 0), independently per column.
pub fn hop_softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut w = logits.to_owned();
    for mut col in w.columns_mut() {
        let max = col.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        col.mapv_inplace(|x| (x - max).exp());
        let sum = col.sum();
        col /= sum;
    }
    w
}

/// `Σ_k softmax(logits)_k · H(k)` with one logit per hop.
pub fn hop_combine(stack: &DiffusionStack, logits: &[f64]) -> Result<FeatureMatrix> {
    let logits = ArrayView2::from_shape((logits.len(), 1), logits).expect("column");
    hop_combine_weighted(stack, &hop_softmax(logits))
}

/// Combines hops with `(K+1) × 1` or `(K+1) × dim` logits.
pub fn hop_combine_logits(stack: &DiffusionStack, logits: ArrayView2<f64>) -> Result<FeatureMatrix> {
    hop_combine_weighted(stack, &hop_softmax(logits))
}

fn hop_combine_weighted(stack: &DiffusionStack, weights: &Array2<f64>) -> Result<FeatureMatrix> {
    check_logit_shape(stack, weights.dim())?;
    let mut out = Array2::zeros(stack.hops[0].dim());
    for (k, h) in stack.hops.iter().enumerate() {
        let wk = weights.row(k);
        if wk.len() == 1 {
            out.scaled_add(wk[0], h);
        } else {
            out += &(h * &wk);
        }
    }
    Ok(out)
}

fn check_logit_shape(stack: &DiffusionStack, (rows, cols): (usize, usize)) -> Result<()> {
    if rows != stack.hops.len() {
        return Err(Error::Shape(format!(
            "{rows} hop logits for a stack of {} hops",
            stack.hops.len()
        )));
    }
    if cols != 1 && cols != stack.dim() {
        return Err(Error::Shape(format!(
            "hop logits have {cols} columns, expected 1 or {}",
            stack.dim()
        )));
    }
    Ok(())
}

/// One transition operator per branch, built once per graph.
#[derive(Debug, Clone)]
pub struct BranchOperators {
    pub branches: Vec<BranchConfig>,
    pub transitions: Vec<TransitionMatrix>,
}

impl BranchOperators {
    pub fn new(graph: &SparseGraph, branches: &[BranchConfig]) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Config("branch list is empty".into()));
        }
        for b in branches {
            b.validate()?;
        }
        // Branches sharing a kind share one operator build.
        let mut transitions: Vec<TransitionMatrix> = Vec::with_capacity(branches.len());
        for b in branches {
            let t = match transitions.iter().find(|t| t.kind() == b.kind) {
                Some(t) => t.clone(),
                None => build_transition(graph, b.kind),
            };
            transitions.push(t);
        }
        Ok(BranchOperators {
            branches: branches.to_vec(),
            transitions,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.transitions[0].num_nodes()
    }

    pub fn output_width(&self) -> usize {
        self.branches.iter().map(|b| b.out_dim).sum()
    }
}

/// Intermediate values of one inception forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct InceptionCache {
    pub input: Array2<f64>,
    pub stacks: Vec<DiffusionStack>,
    pub weights: Vec<Array2<f64>>,
    pub reps: Array2<f64>,
}

/// Builds the branch operators for `graph` and runs the inception bank.
pub fn inception_forward(
    graph: &SparseGraph,
    x: &FeatureMatrix,
    branches: &[BranchConfig],
    params: &ModelParams,
) -> Result<FeatureMatrix> {
    let ops = BranchOperators::new(graph, branches)?;
    Ok(inception_forward_cached(&ops, x.clone(), params)?.reps)
}

pub fn inception_forward_cached(
    ops: &BranchOperators,
    input: Array2<f64>,
    params: &ModelParams,
) -> Result<InceptionCache> {
    if params.projections.len() != ops.branches.len() || params.hop_logits.len() != ops.branches.len() {
        return Err(Error::Shape(format!(
            "params hold {} projections for {} branches",
            params.projections.len(),
            ops.branches.len()
        )));
    }
    let n = input.nrows();
    let mut reps = Array2::zeros((n, ops.output_width()));
    let mut stacks = Vec::with_capacity(ops.branches.len());
    let mut weights = Vec::with_capacity(ops.branches.len());
    let mut col = 0;
    for ((b, t), (w, logits)) in ops
        .branches
        .iter()
        .zip(&ops.transitions)
        .zip(params.projections.iter().zip(&params.hop_logits))
    {
        if w.nrows() != input.ncols() || w.ncols() != b.out_dim {
            return Err(Error::Shape(format!(
                "projection is {:?}, expected ({}, {})",
                w.dim(),
                input.ncols(),
                b.out_dim
            )));
        }
        let projected = input.dot(w);
        let stack = diffuse(t, projected.view(), b.depth)?;
        let hop_w = hop_softmax(logits.view());
        let z = hop_combine_weighted(&stack, &hop_w)?;
        reps.slice_mut(s![.., col..col + b.out_dim]).assign(&z);
        col += b.out_dim;
        stacks.push(stack);
        weights.push(hop_w);
    }
    Ok(InceptionCache {
        input,
        stacks,
        weights,
        reps,
    })
}

/// Gradients flowing out of the inception bank.
#[derive(Debug, Clone)]
pub struct InceptionGrads {
    pub projections: Vec<Array2<f64>>,
    pub hop_logits: Vec<Array2<f64>>,
    pub input: Array2<f64>,
}

/// Backpropagates `∂L/∂reps` through hop mixing, diffusion and projection.
pub fn inception_backward(
    ops: &BranchOperators,
    cache: &InceptionCache,
    params: &ModelParams,
    d_reps: ArrayView2<f64>,
) -> Result<InceptionGrads> {
    if d_reps.dim() != cache.reps.dim() {
        return Err(Error::Shape("representation gradient shape".into()));
    }
    let mut d_input = Array2::zeros(cache.input.dim());
    let mut d_proj = Vec::with_capacity(ops.branches.len());
    let mut d_logits = Vec::with_capacity(ops.branches.len());
    let mut col = 0;
    for (i, b) in ops.branches.iter().enumerate() {
        let dz = d_reps.slice(s![.., col..col + b.out_dim]);
        col += b.out_dim;
        let stack = &cache.stacks[i];
        let w = &cache.weights[i];
        let scalar = w.ncols() == 1;

        // ∂L/∂w(k, c) and the per-hop gradient G(k) = w_k ⊙ dZ.
        let mut d_w = Array2::zeros(w.dim());
        let mut per_hop = Vec::with_capacity(stack.hops.len());
        for (k, h) in stack.hops.iter().enumerate() {
            let prod = &dz * h;
            if scalar {
                d_w[[k, 0]] = prod.sum();
                per_hop.push(&dz * w[[k, 0]]);
            } else {
                d_w.row_mut(k).assign(&prod.sum_axis(Axis(0)));
                per_hop.push(&dz * &w.row(k));
            }
        }
        // Softmax Jacobian along the hop axis, per column.
        let mut d_theta = Array2::zeros(w.dim());
        for c in 0..w.ncols() {
            let dot: f64 = (0..w.nrows()).map(|k| w[[k, c]] * d_w[[k, c]]).sum();
            for k in 0..w.nrows() {
                d_theta[[k, c]] = w[[k, c]] * (d_w[[k, c]] - dot);
            }
        }

        let d_projected = diffuse_backward(&ops.transitions[i], &per_hop)?;
        d_proj.push(cache.input.t().dot(&d_projected));
        d_input += &d_projected.dot(&params.projections[i].t());
        d_logits.push(d_theta);
    }
    Ok(InceptionGrads {
        projections: d_proj,
        hop_logits: d_logits,
        input: d_input,
    })
}
