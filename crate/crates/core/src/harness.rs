//! Training loop, split evaluation and multi-seed aggregation.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{cooccurrence_augment, edge_dropout, sample_negatives, sample_walks, stream_rng};
use crate::checkpoint::RngState;
use crate::config::{RefreshReps, RunConfig, SelectMetric};
use crate::diffusion::BranchOperators;
use crate::error::{Error, Result};
use crate::graph::{build_csr, load_features, load_splits_with_nodes, DatasetSplits, FeatureMatrix, Pair, SparseGraph};
use crate::metrics::{auc, hits_at_k, mean_std, mrr};
use crate::model::{
    batch_gradients, forward_reps, init_params, score_links, InputMode, LinkBatch, ModelConfig, ModelParams,
};
use crate::optim::{adam_step, AdamState};

/// Splits plus optional node features.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub splits: DatasetSplits,
    pub features: Option<FeatureMatrix>,
}

impl Dataset {
    pub fn new(splits: DatasetSplits, features: Option<FeatureMatrix>) -> Result<Self> {
        splits.validate()?;
        if let Some(f) = &features {
            if f.nrows() != splits.num_nodes {
                return Err(Error::Data(format!(
                    "{} feature rows for {} nodes",
                    f.nrows(),
                    splits.num_nodes
                )));
            }
        }
        Ok(Dataset { splits, features })
    }

    pub fn load(config: &RunConfig) -> Result<Self> {
        let dir = config
            .data
            .splits
            .as_deref()
            .ok_or_else(|| Error::Config("data.splits is not set".into()))?;
        let splits = load_splits_with_nodes(dir, config.data.num_nodes)?;
        let features = match &config.data.features {
            Some(p) => Some(load_features(p, splits.num_nodes)?),
            None => None,
        };
        Dataset::new(splits, features)
    }

    pub fn num_nodes(&self) -> usize {
        self.splits.num_nodes
    }
}

/// Builds the model shape from the run config and the dataset.
pub fn model_config(config: &RunConfig, dataset: &Dataset) -> Result<ModelConfig> {
    let input = config.model.input.unwrap_or(if dataset.features.is_some() {
        InputMode::Features
    } else {
        InputMode::Embeddings
    });
    let feature_dim = dataset.features.as_ref().map_or(0, |f| f.ncols());
    if matches!(input, InputMode::Features | InputMode::Both) && dataset.features.is_none() {
        return Err(Error::Config(format!(
            "model.input = {input:?} but no data.features given"
        )));
    }
    let cfg = ModelConfig {
        num_nodes: dataset.num_nodes(),
        branches: config.model.branches.clone(),
        hop_weights: config.model.hop_weights,
        input,
        feature_dim,
        embedding_dim: config.model.embedding_dim,
        hidden: config.model.hidden,
        loss: config.model.loss,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Negatives used to rank one split's positives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalNegatives {
    /// One shared list; every positive is ranked against all of it.
    Shared(Vec<Pair>),
    /// `q` negatives per positive, stored positive by positive.
    PerPositive { pairs: Vec<Pair>, q: usize },
}

impl EvalNegatives {
    pub fn pairs(&self) -> &[Pair] {
        match self {
            EvalNegatives::Shared(p) => p,
            EvalNegatives::PerPositive { pairs, .. } => pairs,
        }
    }
}

/// Hits@K for each configured K, MRR and AUC on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub auc: f64,
}

/// Scores `positives` against `negatives` with any pair scorer.
pub fn evaluate_scores(pos: &[f64], neg: &[f64], negatives: &EvalNegatives, hits_k: &[usize]) -> Result<SplitMetrics> {
    let mut hits = BTreeMap::new();
    for &k in hits_k {
        hits.insert(k, hits_at_k(pos, neg, k)?);
    }
    let mrr_value = match negatives {
        EvalNegatives::Shared(_) => mrr(pos, &vec![neg; pos.len()])?,
        EvalNegatives::PerPositive { q, .. } => {
            let lists: Vec<&[f64]> = neg.chunks(*q).collect();
            mrr(pos, &lists)?
        }
    };
    Ok(SplitMetrics {
        hits,
        mrr: mrr_value,
        auc: auc(pos, neg)?,
    })
}

/// Graphs, operators and fixed evaluation negatives shared by every run.
pub struct Prepared<'a> {
    pub config: &'a RunConfig,
    pub dataset: &'a Dataset,
    pub model: ModelConfig,
    pub train_graph: SparseGraph,
    pub train_ops: BranchOperators,
    pub test_ops: BranchOperators,
    pub valid_negatives: Option<EvalNegatives>,
    pub test_negatives: Option<EvalNegatives>,
}

impl<'a> Prepared<'a> {
    pub fn new(config: &'a RunConfig, dataset: &'a Dataset) -> Result<Self> {
        config.validate()?;
        let model = model_config(config, dataset)?;
        let splits = &dataset.splits;
        let n = splits.num_nodes;
        let train_graph = build_csr(n, &splits.train_edges)?;
        let train_ops = BranchOperators::new(&train_graph, &model.branches)?;
        let test_ops = if config.data.merge_valid_into_graph {
            let mut edges = splits.train_edges.clone();
            edges.extend_from_slice(&splits.valid_edges);
            BranchOperators::new(&build_csr(n, &edges)?, &model.branches)?
        } else {
            train_ops.clone()
        };

        let all_pos = splits.all_positives();
        let q = config.eval.negatives_per_positive;
        let make = |fixed: &Option<Vec<Pair>>, pos: &[Pair], stream: u64| -> Result<Option<EvalNegatives>> {
            if pos.is_empty() {
                return Ok(None);
            }
            Ok(Some(match fixed {
                Some(list) if !list.is_empty() => EvalNegatives::Shared(list.clone()),
                _ => {
                    let seed = stream_rng(config.eval.negative_seed, stream).next_u64();
                    EvalNegatives::PerPositive {
                        pairs: sample_negatives(&train_graph, pos, q, seed, &all_pos)?,
                        q,
                    }
                }
            }))
        };
        let valid_negatives = make(&splits.valid_negatives, &splits.valid_edges, 0)?;
        let test_negatives = make(&splits.test_negatives, &splits.test_edges, 1)?;

        Ok(Prepared {
            config,
            dataset,
            model,
            train_graph,
            train_ops,
            test_ops,
            valid_negatives,
            test_negatives,
        })
    }

    fn features(&self) -> Option<&FeatureMatrix> {
        self.dataset.features.as_ref()
    }

    fn evaluate(
        &self,
        ops: &BranchOperators,
        params: &ModelParams,
        pos: &[Pair],
        negs: &EvalNegatives,
    ) -> Result<SplitMetrics> {
        let reps = forward_reps(ops, &self.model, self.features(), params)?.reps;
        let pos_scores = score_links(&reps, pos, params)?;
        let neg_scores = score_links(&reps, negs.pairs(), params)?;
        evaluate_scores(&pos_scores, &neg_scores, negs, &self.config.eval.hits_k)
    }

    pub fn evaluate_valid(&self, params: &ModelParams) -> Result<Option<SplitMetrics>> {
        match &self.valid_negatives {
            Some(negs) => self
                .evaluate(&self.train_ops, params, &self.dataset.splits.valid_edges, negs)
                .map(Some),
            None => Ok(None),
        }
    }

    pub fn evaluate_test(&self, params: &ModelParams) -> Result<SplitMetrics> {
        let negs = self
            .test_negatives
            .as_ref()
            .ok_or_else(|| Error::Data("test split has no positives".into()))?;
        self.evaluate(&self.test_ops, params, &self.dataset.splits.test_edges, negs)
    }

    fn primary_key(&self, m: &SplitMetrics) -> (f64, f64) {
        let k = self.config.eval.primary_k;
        let first = match self.config.eval.select_by {
            SelectMetric::Hits => match m.hits.get(&k) {
                Some(&h) => h,
                None => hits_at_k_fallback(m, k),
            },
            SelectMetric::Mrr => m.mrr,
            SelectMetric::Auc => m.auc,
        };
        (first, m.auc)
    }
}

fn hits_at_k_fallback(m: &SplitMetrics, k: usize) -> f64 {
    // primary_k outside hits_k: use the closest configured K
    m.hits
        .iter()
        .min_by_key(|(kk, _)| kk.abs_diff(k))
        .map_or(0.0, |(_, &h)| h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid: Option<SplitMetrics>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelConfig,
    /// Parameters at the best validation epoch (final epoch without validation).
    pub params: ModelParams,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    /// Training RNG position after the last step.
    pub rng: RngState,
}

/// Loads the dataset named in `config` and trains one seed.
pub fn train(config: &RunConfig, seed: u64) -> Result<TrainOutcome> {
    let dataset = Dataset::load(config)?;
    train_on(config, &dataset, seed)
}

pub fn train_on(config: &RunConfig, dataset: &Dataset, seed: u64) -> Result<TrainOutcome> {
    let prepared = Prepared::new(config, dataset)?;
    train_prepared(&prepared, seed)
}

fn augmented_ops(prepared: &Prepared<'_>, rng: &mut ChaCha8Rng) -> Result<BranchOperators> {
    let aug = &prepared.config.augment;
    let base = &prepared.train_graph;
    let walks = sample_walks(base, aug.walk_length, aug.walks_per_node, rng.next_u64())?;
    let added = cooccurrence_augment(base, &walks, aug.window, aug.tau)?;
    let mut view = edge_dropout(base, aug.dropout, rng.next_u64())?;
    view.add_edges(&added);
    BranchOperators::new(&view.effective_graph(), &prepared.model.branches)
}

/// Runs the optimization loop for one seed on prepared data.
pub fn train_prepared(prepared: &Prepared<'_>, seed: u64) -> Result<TrainOutcome> {
    let config = prepared.config;
    let tc = &config.train;
    let model = &prepared.model;
    let features = prepared.features();

    let mut params = init_params(model, seed)?;
    let mut adam = AdamState::new(&params);
    let mut rng = stream_rng(seed, 1);
    let no_exclusions = HashSet::new();
    let mut positives = prepared.dataset.splits.train_edges.clone();
    if positives.is_empty() {
        return Err(Error::Data("no training edges".into()));
    }

    let mut ops = prepared.train_ops.clone();
    let mut log = Vec::with_capacity(tc.epochs);
    let mut best: Option<((f64, f64), usize, ModelParams)> = None;

    for epoch in 0..tc.epochs {
        if config.augment.enabled && epoch % config.augment.resample_every == 0 {
            ops = augmented_ops(prepared, &mut rng)?;
        }
        positives.shuffle(&mut rng);
        for p in positives.iter_mut() {
            if rng.random::<bool>() {
                *p = (p.1, p.0);
            }
        }

        let mut epoch_cache = match tc.refresh_reps {
            RefreshReps::Epoch => Some(forward_reps(&ops, model, features, &params)?),
            RefreshReps::Step => None,
        };
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (step, chunk) in positives.chunks(tc.batch_size).enumerate() {
            let neg = sample_negatives(
                &prepared.train_graph,
                chunk,
                tc.negatives,
                rng.next_u64(),
                &no_exclusions,
            )?;
            let batch = LinkBatch::new(chunk.to_vec(), neg)?;
            let fresh;
            let cache = match &mut epoch_cache {
                Some(c) => &*c,
                None => {
                    fresh = forward_reps(&ops, model, features, &params)?;
                    &fresh
                }
            };
            let (loss, grads) = batch_gradients(&ops, model, cache, &params, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}, step {step}")));
            }
            adam_step(&mut params, &grads, &mut adam, &tc.optimizer)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, step {step}: {e}")))?;
            loss_sum += loss;
            batches += 1;
        }
        drop(epoch_cache);

        let is_eval_epoch = (epoch + 1) % tc.eval_every == 0 || epoch + 1 == tc.epochs;
        let valid = if is_eval_epoch {
            prepared.evaluate_valid(&params)?
        } else {
            None
        };
        if let Some(m) = &valid {
            let key = prepared.primary_key(m);
            let improved = match &best {
                None => true,
                Some((bk, _, _)) => key.0 > bk.0 || (key.0 == bk.0 && key.1 > bk.1),
            };
            if improved {
                best = Some((key, epoch, params.clone()));
            }
        }
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / batches as f64,
            valid,
        });
    }

    let (best_epoch, params) = match best {
        Some((_, e, p)) => (e, p),
        None => (tc.epochs - 1, params),
    };
    Ok(TrainOutcome {
        model: model.clone(),
        params,
        best_epoch,
        log,
        rng: RngState::capture(&rng),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub seed: u64,
    pub hits: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 when only one run exists.
    pub std: f64,
}

/// Per-run test metrics and their mean ± sample std.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub n_runs: usize,
    pub seeds: Vec<u64>,
    pub per_run: Vec<RunMetrics>,
    /// Keys `hits@K`, `mrr`, `auc`.
    pub aggregate: BTreeMap<String, MeanStd>,
    /// `null` when runtime recording is disabled.
    pub runtime_s: Option<f64>,
}

impl EvalReport {
    pub fn from_runs(config_hash: String, per_run: Vec<RunMetrics>, runtime_s: Option<f64>) -> Self {
        let aggregate = aggregate(&per_run);
        EvalReport {
            config_hash,
            n_runs: per_run.len(),
            seeds: per_run.iter().map(|r| r.seed).collect(),
            per_run,
            aggregate,
            runtime_s,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(format!("metrics json: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

/// Mean and sample std of every metric across runs, in seed order.
pub fn aggregate(runs: &[RunMetrics]) -> BTreeMap<String, MeanStd> {
    let mut out = BTreeMap::new();
    let mut put = |name: String, values: Vec<f64>| {
        let (mean, std) = mean_std(&values);
        out.insert(name, MeanStd { mean, std });
    };
    if let Some(first) = runs.first() {
        for &k in first.hits.keys() {
            put(format!("hits@{k}"), runs.iter().map(|r| r.hits[&k]).collect());
        }
    }
    put("mrr".into(), runs.iter().map(|r| r.mrr).collect());
    put("auc".into(), runs.iter().map(|r| r.auc).collect());
    out
}

/// Loads the configured dataset, trains once per seed and reports test metrics.
pub fn evaluate_runs(config: &RunConfig) -> Result<EvalReport> {
    let dataset = Dataset::load(config)?;
    evaluate_runs_on(config, &dataset)
}

pub fn evaluate_runs_on(config: &RunConfig, dataset: &Dataset) -> Result<EvalReport> {
    let start = Instant::now();
    let prepared = Prepared::new(config, dataset)?;
    let run = |&seed: &u64| -> Result<RunMetrics> {
        let outcome = train_prepared(&prepared, seed)?;
        let m = prepared.evaluate_test(&outcome.params)?;
        Ok(RunMetrics {
            seed,
            hits: m.hits,
            mrr: m.mrr,
            auc: m.auc,
        })
    };
    let results: Vec<Result<RunMetrics>> = if config.eval.parallel_runs {
        config.eval.seeds.par_iter().map(run).collect()
    } else {
        config.eval.seeds.iter().map(run).collect()
    };
    let per_run = results.into_iter().collect::<Result<Vec<_>>>()?;
    let runtime = config.eval.record_runtime.then(|| start.elapsed().as_secs_f64());
    Ok(EvalReport::from_runs(config.hash(), per_run, runtime))
}
