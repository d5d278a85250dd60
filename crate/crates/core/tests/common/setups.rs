//! Desk-scale training problems shared by the pipeline and acceptance tests.

use gidn::config::{RunConfig, SelectMetric};
use gidn::diffusion::BranchConfig;
use gidn::harness::Dataset;
use gidn::synth::{planted_cliques, random_split, stochastic_block_model};
use gidn::TransitionKind;

/// Two 20-node cliques joined by one bridge, 10% of edges held out.
pub fn two_cliques() -> Dataset {
    let (n, edges) = planted_cliques(2, 20);
    Dataset::new(random_split(n, &edges, 0.05, 0.05, 3).unwrap(), None).unwrap()
}

pub fn two_clique_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.model.branches = vec![
        BranchConfig::new(TransitionKind::Sym, 1, 8),
        BranchConfig::new(TransitionKind::Sym, 2, 8),
        BranchConfig::new(TransitionKind::Rw, 3, 8),
    ];
    c.model.embedding_dim = 16;
    c.model.hidden = 16;
    c.train.epochs = 200;
    c.train.batch_size = 64;
    c.train.eval_every = 10;
    c.eval.seeds = vec![0];
    c.eval.record_runtime = false;
    c.eval.parallel_runs = false;
    c
}

/// 1,000 nodes in 4 blocks, p_in 0.05, p_out 0.002, 10% of edges held out.
pub fn sbm() -> Dataset {
    let (n, edges) = stochastic_block_model(4, 250, 0.05, 0.002, 7);
    Dataset::new(random_split(n, &edges, 0.05, 0.05, 7).unwrap(), None).unwrap()
}

pub fn sbm_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.model.branches = vec![
        BranchConfig::new(TransitionKind::Sym, 2, 16),
        BranchConfig::new(TransitionKind::Rw, 4, 16),
        BranchConfig::new(TransitionKind::Rw, 6, 16),
    ];
    c.model.embedding_dim = 32;
    c.model.hidden = 32;
    c.train.epochs = 40;
    c.eval.select_by = SelectMetric::Auc;
    c.eval.seeds = vec![0];
    c.eval.record_runtime = false;
    c
}
