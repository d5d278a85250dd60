//! Run configuration, loaded from TOML with `section.key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diffusion::{BranchConfig, HopWeighting};
use crate::error::{Error, Result};
use crate::model::{InputMode, LossKind};
use crate::optim::AdamConfig;
use crate::transition::TransitionKind;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory holding `train.tsv`, `valid.tsv`, `test.tsv` and optional negatives.
    pub splits: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub num_nodes: Option<usize>,
    /// Add validation edges to the message-passing graph for test evaluation.
    pub merge_valid_into_graph: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub branches: Vec<BranchConfig>,
    pub hop_weights: HopWeighting,
    /// Unset: features when a feature file is given, else embeddings.
    pub input: Option<InputMode>,
    pub embedding_dim: usize,
    pub hidden: usize,
    pub loss: LossKind,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            branches: vec![
                BranchConfig::new(TransitionKind::Sym, 1, 64),
                BranchConfig::new(TransitionKind::Sym, 2, 64),
                BranchConfig::new(TransitionKind::Rw, 3, 64),
            ],
            hop_weights: HopWeighting::Scalar,
            input: None,
            embedding_dim: 256,
            hidden: 256,
            loss: LossKind::Bce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefreshReps {
    /// Recompute node representations before every optimizer step (exact).
    #[default]
    Step,
    /// Reuse one forward pass per epoch; gradients through the branches are
    /// then taken at stale parameters.
    Epoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    /// Negatives per positive during training.
    pub negatives: usize,
    pub eval_every: usize,
    pub refresh_reps: RefreshReps,
    pub optimizer: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 100,
            batch_size: 1024,
            negatives: 1,
            eval_every: 1,
            refresh_reps: RefreshReps::Step,
            optimizer: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSection {
    pub enabled: bool,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    pub tau: usize,
    pub dropout: f64,
    /// Epochs between augmentation resamples.
    pub resample_every: usize,
}

impl Default for AugmentSection {
    fn default() -> Self {
        AugmentSection {
            enabled: false,
            walk_length: 10,
            walks_per_node: 5,
            window: 3,
            tau: 3,
            dropout: 0.05,
            resample_every: 1,
        }
    }
}

/// Validation metric that picks the best epoch; ties fall back to AUC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMetric {
    /// Hits@`primary_k`.
    #[default]
    Hits,
    Mrr,
    Auc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub seeds: Vec<u64>,
    pub hits_k: Vec<usize>,
    /// K used for best-epoch selection.
    pub primary_k: usize,
    pub select_by: SelectMetric,
    /// Sampled negatives per positive when no negative file is present.
    pub negatives_per_positive: usize,
    pub negative_seed: u64,
    /// Write wall-clock runtime into metrics; off makes metrics byte-stable.
    pub record_runtime: bool,
    /// Train independent seeds on parallel threads.
    pub parallel_runs: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            seeds: (0..10).collect(),
            hits_k: vec![10, 50, 100],
            primary_k: 50,
            select_by: SelectMetric::Hits,
            negatives_per_positive: 10,
            negative_seed: 0x5eed,
            record_runtime: true,
            parallel_runs: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub augment: AugmentSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.eval.seeds.is_empty() {
            return bad("eval.seeds must list at least one seed");
        }
        if self.eval.hits_k.is_empty() || self.eval.hits_k.contains(&0) {
            return bad("eval.hits_k values must be >= 1");
        }
        if self.eval.primary_k == 0 {
            return bad("eval.primary_k must be >= 1");
        }
        if self.eval.negatives_per_positive == 0 {
            return bad("eval.negatives_per_positive must be >= 1");
        }
        if self.train.epochs == 0 {
            return bad("train.epochs must be >= 1");
        }
        if self.train.batch_size == 0 {
            return bad("train.batch_size must be >= 1");
        }
        if self.train.negatives == 0 {
            return bad("train.negatives must be >= 1");
        }
        if self.train.eval_every == 0 {
            return bad("train.eval_every must be >= 1");
        }
        let opt = &self.train.optimizer;
        if !(opt.lr >= 0.0 && opt.lr.is_finite()) {
            return bad("train.optimizer.lr must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&opt.beta1) || !(0.0..1.0).contains(&opt.beta2) || opt.eps <= 0.0 {
            return bad("optimizer betas must be in [0, 1) and eps > 0");
        }
        if self.model.branches.is_empty() {
            return bad("model.branches must not be empty");
        }
        for b in &self.model.branches {
            b.validate()?;
        }
        if self.model.hidden == 0 {
            return bad("model.hidden must be >= 1");
        }
        let aug = &self.augment;
        if aug.enabled {
            if aug.walk_length == 0 || aug.window == 0 || aug.tau == 0 || aug.resample_every == 0 {
                return bad("augment walk_length, window, tau and resample_every must be >= 1");
            }
            if !(0.0..1.0).contains(&aug.dropout) {
                return bad("augment.dropout must be in [0, 1)");
            }
        }
        Ok(())
    }

    /// Parses TOML text, applying `key.path=value` overrides first.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a config file; relative data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data.splits, &mut cfg.data.features].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        hex::encode(&digest[..8])
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override {ov:?} is not key=value")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, path) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in path {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.eval.seeds, (0..10).collect::<Vec<_>>());
        assert_eq!(cfg.augment.walk_length, 10);
        assert!(!cfg.augment.enabled);
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        let text = RunConfig::default().to_toml().unwrap();
        let cfg = RunConfig::from_toml_with_overrides(
            &text,
            &[
                "train.epochs=7".into(),
                "model.loss=\"auc\"".into(),
                "eval.seeds=[3, 4]".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.train.epochs, 7);
        assert_eq!(cfg.model.loss, LossKind::Auc);
        assert_eq!(cfg.eval.seeds, vec![3, 4]);
        // bare strings are accepted too
        let cfg = RunConfig::from_toml_with_overrides("", &["model.hop_weights=channel".into()]).unwrap();
        assert_eq!(cfg.model.hop_weights, HopWeighting::Channel);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_toml_with_overrides("[train]\nepochs = 0\n", &[]).is_err());
        assert!(RunConfig::from_toml_with_overrides("[eval]\nseeds = []\n", &[]).is_err());
        assert!(RunConfig::from_toml_with_overrides("[eval]\nhits_k = [0]\n", &[]).is_err());
        let err = RunConfig::from_toml_with_overrides("[train]\nepoch = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("epoch"), "{err}");
        assert!(RunConfig::from_toml_with_overrides("", &["nonsense".into()]).is_err());
    }

    #[test]
    fn branches_from_toml() {
        let text = "[[model.branches]]\nkind = \"rw\"\ndepth = 3\nout_dim = 8\n";
        let cfg = RunConfig::from_toml_with_overrides(text, &[]).unwrap();
        assert_eq!(cfg.model.branches, vec![BranchConfig::new(TransitionKind::Rw, 3, 8)]);
    }

    #[test]
    fn hash_is_stable() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.hash(), b.hash());
        b.train.epochs += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
