//! Trainable parameters, the Hadamard-MLP link decoder, losses and exact
//! reverse-mode gradients through the whole inception model.

use std::ops::{Deref, DerefMut};

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    inception_backward, inception_forward_cached, BranchConfig, BranchOperators, HopWeighting, InceptionCache,
};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, Pair, SparseGraph};

/// Which node inputs feed the branch projections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    Features,
    #[default]
    Embeddings,
    /// Features and free embeddings concatenated, features first.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    /// Binary cross-entropy over sampled negatives.
    #[default]
    Bce,
    /// Squared pairwise margin `(1 - (s⁺ - s⁻))²` over each positive's negatives.
    Auc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_nodes: usize,
    pub branches: Vec<BranchConfig>,
    pub hop_weights: HopWeighting,
    pub input: InputMode,
    /// Width of the external feature matrix, 0 when there is none.
    pub feature_dim: usize,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub loss: LossKind,
}

impl ModelConfig {
    pub fn uses_features(&self) -> bool {
        matches!(self.input, InputMode::Features | InputMode::Both)
    }

    pub fn uses_embeddings(&self) -> bool {
        matches!(self.input, InputMode::Embeddings | InputMode::Both)
    }

    pub fn input_dim(&self) -> usize {
        let mut d = 0;
        if self.uses_features() {
            d += self.feature_dim;
        }
        if self.uses_embeddings() {
            d += self.embedding_dim;
        }
        d
    }

    pub fn rep_dim(&self) -> usize {
        self.branches.iter().map(|b| b.out_dim).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return Err(Error::Config("at least one branch is required".into()));
        }
        for b in &self.branches {
            b.validate()?;
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be >= 1".into()));
        }
        if self.uses_features() && self.feature_dim == 0 {
            return Err(Error::Config(format!("input={:?} needs a feature file", self.input)));
        }
        if self.uses_embeddings() && self.embedding_dim == 0 {
            return Err(Error::Config("embedding_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// All trainable tensors. Every array is kept in standard layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// `d_in × out_dim` per branch.
    pub projections: Vec<Array2<f64>>,
    /// `(K+1) × 1` (scalar) or `(K+1) × out_dim` (channel) per branch.
    pub hop_logits: Vec<Array2<f64>>,
    pub mlp_w1: Array2<f64>,
    pub mlp_b1: Array1<f64>,
    pub mlp_w2: Array1<f64>,
    pub mlp_b2: Array1<f64>,
    pub embeddings: Option<Array2<f64>>,
}

impl ModelParams {
    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            projections: self.projections.iter().map(|a| Array2::zeros(a.dim())).collect(),
            hop_logits: self.hop_logits.iter().map(|a| Array2::zeros(a.dim())).collect(),
            mlp_w1: Array2::zeros(self.mlp_w1.dim()),
            mlp_b1: Array1::zeros(self.mlp_b1.len()),
            mlp_w2: Array1::zeros(self.mlp_w2.len()),
            mlp_b2: Array1::zeros(self.mlp_b2.len()),
            embeddings: self.embeddings.as_ref().map(|e| Array2::zeros(e.dim())),
        }
    }

    /// Named parameter groups in declaration order.
    pub fn groups(&self) -> Vec<(String, &[f64], Vec<usize>)> {
        let mut out = Vec::new();
        for (b, p) in self.projections.iter().enumerate() {
            out.push((
                format!("projection.{b}"),
                p.as_slice().expect("std layout"),
                p.shape().to_vec(),
            ));
        }
        for (b, p) in self.hop_logits.iter().enumerate() {
            out.push((
                format!("hop_logits.{b}"),
                p.as_slice().expect("std layout"),
                p.shape().to_vec(),
            ));
        }
        out.push((
            "mlp.w1".into(),
            self.mlp_w1.as_slice().expect("std layout"),
            self.mlp_w1.shape().to_vec(),
        ));
        out.push((
            "mlp.b1".into(),
            self.mlp_b1.as_slice().expect("std layout"),
            self.mlp_b1.shape().to_vec(),
        ));
        out.push((
            "mlp.w2".into(),
            self.mlp_w2.as_slice().expect("std layout"),
            self.mlp_w2.shape().to_vec(),
        ));
        out.push((
            "mlp.b2".into(),
            self.mlp_b2.as_slice().expect("std layout"),
            self.mlp_b2.shape().to_vec(),
        ));
        if let Some(e) = &self.embeddings {
            out.push((
                "embeddings".into(),
                e.as_slice().expect("std layout"),
                e.shape().to_vec(),
            ));
        }
        out
    }

    pub fn groups_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (b, p) in self.projections.iter_mut().enumerate() {
            out.push((format!("projection.{b}"), p.as_slice_mut().expect("std layout")));
        }
        for (b, p) in self.hop_logits.iter_mut().enumerate() {
            out.push((format!("hop_logits.{b}"), p.as_slice_mut().expect("std layout")));
        }
        out.push(("mlp.w1".into(), self.mlp_w1.as_slice_mut().expect("std layout")));
        out.push(("mlp.b1".into(), self.mlp_b1.as_slice_mut().expect("std layout")));
        out.push(("mlp.w2".into(), self.mlp_w2.as_slice_mut().expect("std layout")));
        out.push(("mlp.b2".into(), self.mlp_b2.as_slice_mut().expect("std layout")));
        if let Some(e) = &mut self.embeddings {
            out.push(("embeddings".into(), e.as_slice_mut().expect("std layout")));
        }
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.groups().iter().map(|(_, g, _)| g.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.groups().iter().all(|(_, g, _)| g.iter().all(|x| x.is_finite()))
    }

    /// Checks every tensor against the shapes `config` implies.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let expected = init_params(config, 0)?;
        let a: Vec<_> = self.groups().into_iter().map(|(n, _, s)| (n, s)).collect();
        let b: Vec<_> = expected.groups().into_iter().map(|(n, _, s)| (n, s)).collect();
        if a != b {
            return Err(Error::Shape(format!(
                "parameter layout {a:?} does not match config {b:?}"
            )));
        }
        Ok(())
    }
}

/// Gradient of the loss for every [`ModelParams`] tensor, same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet(pub ModelParams);

impl Deref for GradientSet {
    type Target = ModelParams;
    fn deref(&self) -> &ModelParams {
        &self.0
    }
}

impl DerefMut for GradientSet {
    fn deref_mut(&mut self) -> &mut ModelParams {
        &mut self.0
    }
}

impl GradientSet {
    /// Euclidean norm per group.
    pub fn norms(&self) -> Vec<(String, f64)> {
        self.groups()
            .into_iter()
            .map(|(n, g, _)| (n, g.iter().map(|x| x * x).sum::<f64>().sqrt()))
            .collect()
    }
}

/// Positives with `Q` negatives each; negatives for positive `i` sit at
/// `neg_pairs[i*Q..(i+1)*Q]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkBatch {
    pub pos_pairs: Vec<Pair>,
    pub neg_pairs: Vec<Pair>,
}

impl LinkBatch {
    pub fn new(pos_pairs: Vec<Pair>, neg_pairs: Vec<Pair>) -> Result<Self> {
        if pos_pairs.is_empty() && !neg_pairs.is_empty()
            || !pos_pairs.is_empty() && !neg_pairs.len().is_multiple_of(pos_pairs.len())
        {
            return Err(Error::Shape(format!(
                "{} negatives is not a multiple of {} positives",
                neg_pairs.len(),
                pos_pairs.len()
            )));
        }
        Ok(LinkBatch { pos_pairs, neg_pairs })
    }

    pub fn negatives_per_positive(&self) -> usize {
        if self.pos_pairs.is_empty() {
            0
        } else {
            self.neg_pairs.len() / self.pos_pairs.len()
        }
    }
}

fn glorot(rng: &mut ChaCha8Rng, fan_in: usize, fan_out: usize) -> impl FnMut() -> f64 + '_ {
    let a = glorot_bound(fan_in, fan_out);
    move || rng.random_range(-a..=a)
}

/// `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform projections and MLP weights, zero biases, zero hop
/// logits, `N(0, 1/d)` embeddings. Fully determined by `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d_in = config.input_dim();
    let projections = config
        .branches
        .iter()
        .map(|b| {
            let mut draw = glorot(&mut rng, d_in, b.out_dim);
            Array2::from_shape_simple_fn((d_in, b.out_dim), &mut draw)
        })
        .collect();
    let hop_logits = config
        .branches
        .iter()
        .map(|b| {
            let cols = match config.hop_weights {
                HopWeighting::Scalar => 1,
                HopWeighting::Channel => b.out_dim,
            };
            Array2::zeros((b.depth + 1, cols))
        })
        .collect();
    let rep = config.rep_dim();
    let mlp_w1 = {
        let mut draw = glorot(&mut rng, rep, config.hidden);
        Array2::from_shape_simple_fn((rep, config.hidden), &mut draw)
    };
    let mlp_w2 = {
        let mut draw = glorot(&mut rng, config.hidden, 1);
        Array1::from_shape_simple_fn(config.hidden, &mut draw)
    };
    let embeddings = if config.uses_embeddings() {
        let std = 1.0 / (config.embedding_dim as f64).sqrt();
        let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
        Some(Array2::from_shape_simple_fn(
            (config.num_nodes, config.embedding_dim),
            || normal.sample(&mut rng),
        ))
    } else {
        None
    };
    Ok(ModelParams {
        projections,
        hop_logits,
        mlp_w1,
        mlp_b1: Array1::zeros(config.hidden),
        mlp_w2,
        mlp_b2: Array1::zeros(1),
        embeddings,
    })
}

/// Concatenates external features and free embeddings as the config asks.
pub fn assemble_input(
    config: &ModelConfig,
    features: Option<&FeatureMatrix>,
    params: &ModelParams,
) -> Result<Array2<f64>> {
    let mut parts: Vec<ArrayView2<f64>> = Vec::new();
    if config.uses_features() {
        let f = features.ok_or_else(|| Error::Config("model expects node features".into()))?;
        if f.ncols() != config.feature_dim || f.nrows() != config.num_nodes {
            return Err(Error::Shape(format!(
                "features are {:?}, config expects ({}, {})",
                f.dim(),
                config.num_nodes,
                config.feature_dim
            )));
        }
        parts.push(f.view());
    }
    if config.uses_embeddings() {
        let e = params
            .embeddings
            .as_ref()
            .ok_or_else(|| Error::Shape("embedding table missing".into()))?;
        parts.push(e.view());
    }
    let x = ndarray::concatenate(Axis(1), &parts).map_err(|e| Error::Shape(e.to_string()))?;
    Ok(x.as_standard_layout().into_owned())
}

/// Intermediate decoder values for a list of pairs.
struct DecoderCache {
    hadamard: Array2<f64>,
    pre: Array2<f64>,
    hidden: Array2<f64>,
    scores: Array1<f64>,
}

fn decode(reps: &Array2<f64>, pairs: &[Pair], params: &ModelParams) -> Result<DecoderCache> {
    let n = reps.nrows();
    let d = reps.ncols();
    if params.mlp_w1.nrows() != d {
        return Err(Error::Shape(format!(
            "representations are {d} wide, decoder expects {}",
            params.mlp_w1.nrows()
        )));
    }
    let mut hadamard = Array2::zeros((pairs.len(), d));
    for (i, &(u, v)) in pairs.iter().enumerate() {
        for id in [u, v] {
            if id >= n {
                return Err(Error::NodeOutOfRange { id, num_nodes: n });
            }
        }
        let mut row = hadamard.row_mut(i);
        row.assign(&reps.row(u));
        row *= &reps.row(v);
    }
    let pre = hadamard.dot(&params.mlp_w1) + &params.mlp_b1;
    let hidden = pre.mapv(|x| x.max(0.0));
    let scores = hidden.dot(&params.mlp_w2) + params.mlp_b2[0];
    Ok(DecoderCache {
        hadamard,
        pre,
        hidden,
        scores,
    })
}

/// `MLP(h_u ⊙ h_v)`: one ReLU hidden layer, linear scalar output.
pub fn score_links(reps: &FeatureMatrix, pairs: &[Pair], params: &ModelParams) -> Result<Vec<f64>> {
    Ok(decode(reps, pairs, params)?.scores.to_vec())
}

/// `max(x, 0) + log1p(exp(-|x|))`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean of `softplus(-s)` over positives plus mean of `softplus(s)` over
/// negatives. An empty side contributes nothing.
pub fn bce_loss(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    loss_with_grad(LossKind::Bce, pos_scores, neg_scores).0
}

/// Mean of `(1 - (s⁺_i - s⁻_ij))²` with negatives grouped per positive.
pub fn auc_loss(pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    loss_with_grad(LossKind::Auc, pos_scores, neg_scores).0
}

pub fn loss_value(kind: LossKind, pos_scores: &[f64], neg_scores: &[f64]) -> f64 {
    loss_with_grad(kind, pos_scores, neg_scores).0
}

fn mean_of(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// Loss value and its derivative with respect to every score.
fn loss_with_grad(kind: LossKind, pos: &[f64], neg: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    match kind {
        LossKind::Bce => {
            let np = pos.len();
            let nn = neg.len();
            let loss = mean_of(pos.iter().map(|&s| softplus(-s)), np) + mean_of(neg.iter().map(|&s| softplus(s)), nn);
            let dpos = pos.iter().map(|&s| -sigmoid(-s) / np as f64).collect();
            let dneg = neg.iter().map(|&s| sigmoid(s) / nn as f64).collect();
            (loss, dpos, dneg)
        }
        LossKind::Auc => {
            if pos.is_empty() || neg.is_empty() {
                return (0.0, vec![0.0; pos.len()], vec![0.0; neg.len()]);
            }
            let q = neg.len() / pos.len();
            let total = (pos.len() * q) as f64;
            let mut loss = 0.0;
            let mut dpos = vec![0.0; pos.len()];
            let mut dneg = vec![0.0; neg.len()];
            for (i, &sp) in pos.iter().enumerate() {
                for j in i * q..(i + 1) * q {
                    let r = 1.0 - (sp - neg[j]);
                    loss += r * r;
                    dpos[i] += -2.0 * r / total;
                    dneg[j] += 2.0 * r / total;
                }
            }
            (loss / total, dpos, dneg)
        }
    }
}

/// Forward pass of the full model up to node representations.
pub fn forward_reps(
    ops: &BranchOperators,
    config: &ModelConfig,
    features: Option<&FeatureMatrix>,
    params: &ModelParams,
) -> Result<InceptionCache> {
    let input = assemble_input(config, features, params)?;
    inception_forward_cached(ops, input, params)
}

/// Scalar training loss for `batch`.
pub fn batch_loss(
    ops: &BranchOperators,
    config: &ModelConfig,
    features: Option<&FeatureMatrix>,
    params: &ModelParams,
    batch: &LinkBatch,
) -> Result<f64> {
    let cache = forward_reps(ops, config, features, params)?;
    let pos = score_links(&cache.reps, &batch.pos_pairs, params)?;
    let neg = score_links(&cache.reps, &batch.neg_pairs, params)?;
    Ok(loss_value(config.loss, &pos, &neg))
}

/// Loss and gradients for `batch`, backpropagated through a forward cache.
///
/// The cache may be stale (computed with older branch parameters); the
/// decoder always uses the current `params`.
pub fn batch_gradients(
    ops: &BranchOperators,
    config: &ModelConfig,
    cache: &InceptionCache,
    params: &ModelParams,
    batch: &LinkBatch,
) -> Result<(f64, GradientSet)> {
    let np = batch.pos_pairs.len();
    let pairs: Vec<Pair> = batch.pos_pairs.iter().chain(&batch.neg_pairs).copied().collect();
    let dec = decode(&cache.reps, &pairs, params)?;
    let scores = dec.scores.as_slice().expect("contiguous");
    let (loss, dpos, dneg) = loss_with_grad(config.loss, &scores[..np], &scores[np..]);
    let dscore = Array1::from_iter(dpos.into_iter().chain(dneg));

    let mut grads = params.zeros_like();
    grads.mlp_b2[0] = dscore.sum();
    grads.mlp_w2 = dec.hidden.t().dot(&dscore);
    // ∂L/∂pre = dscore ⊗ w2, masked by the ReLU.
    let mut d_pre = Array2::zeros(dec.pre.dim());
    for ((i, j), d) in d_pre.indexed_iter_mut() {
        if dec.pre[[i, j]] > 0.0 {
            *d = dscore[i] * params.mlp_w2[j];
        }
    }
    grads.mlp_b1 = d_pre.sum_axis(Axis(0));
    grads.mlp_w1 = dec.hadamard.t().dot(&d_pre);
    let d_had = d_pre.dot(&params.mlp_w1.t());

    let mut d_reps = Array2::zeros(cache.reps.dim());
    for (i, &(u, v)) in pairs.iter().enumerate() {
        let g = d_had.row(i);
        let du = &g * &cache.reps.row(v);
        let dv = &g * &cache.reps.row(u);
        d_reps.row_mut(u).scaled_add(1.0, &du);
        d_reps.row_mut(v).scaled_add(1.0, &dv);
    }

    let ig = inception_backward(ops, cache, params, d_reps.view())?;
    grads.projections = ig.projections;
    grads.hop_logits = ig.hop_logits;
    if let Some(e) = &mut grads.embeddings {
        let offset = if config.uses_features() { config.feature_dim } else { 0 };
        e.assign(&ig.input.slice(s![.., offset..]));
    }
    Ok((loss, GradientSet(grads)))
}

/// Runs forward and backward for one batch.
pub fn loss_and_gradients(
    ops: &BranchOperators,
    config: &ModelConfig,
    features: Option<&FeatureMatrix>,
    params: &ModelParams,
    batch: &LinkBatch,
) -> Result<(f64, GradientSet)> {
    let cache = forward_reps(ops, config, features, params)?;
    batch_gradients(ops, config, &cache, params, batch)
}

/// Gradients of the batch loss with respect to every parameter tensor.
pub fn backward(
    graph: &SparseGraph,
    features: Option<&FeatureMatrix>,
    config: &ModelConfig,
    params: &ModelParams,
    batch: &LinkBatch,
) -> Result<GradientSet> {
    let ops = BranchOperators::new(graph, &config.branches)?;
    Ok(loss_and_gradients(&ops, config, features, params, batch)?.1)
}
