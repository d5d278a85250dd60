//! Trains on a 4-block stochastic block model and compares against Common
//! Neighbors under the same evaluator.
//!
//! ```bash
//! cargo run --release --example sbm_benchmark
//! ```

use std::time::Instant;

use gidn::config::{RunConfig, SelectMetric};
use gidn::diffusion::BranchConfig;
use gidn::harness::{evaluate_scores, train_prepared, Dataset, Prepared};
use gidn::heuristics::{score_pairs, HeuristicKind};
use gidn::synth::{random_split, stochastic_block_model};
use gidn::TransitionKind;

fn main() -> gidn::Result<()> {
    let (n, edges) = stochastic_block_model(4, 250, 0.05, 0.002, 7);
    let splits = random_split(n, &edges, 0.05, 0.05, 7)?;
    println!(
        "{n} nodes, {} train / {} valid / {} test edges",
        splits.train_edges.len(),
        splits.valid_edges.len(),
        splits.test_edges.len()
    );
    let dataset = Dataset::new(splits, None)?;

    // Deeper branches smooth the free embeddings within blocks; the model
    // overfits the training edges after a few epochs, so select on AUC.
    let mut config = RunConfig::default();
    config.model.branches = vec![
        BranchConfig::new(TransitionKind::Sym, 2, 16),
        BranchConfig::new(TransitionKind::Rw, 4, 16),
        BranchConfig::new(TransitionKind::Rw, 6, 16),
    ];
    config.model.embedding_dim = 32;
    config.model.hidden = 32;
    config.train.epochs = 40;
    config.eval.select_by = SelectMetric::Auc;

    let start = Instant::now();
    let prepared = Prepared::new(&config, &dataset)?;
    let outcome = train_prepared(&prepared, 0)?;
    for l in outcome.log.iter().step_by(5) {
        let auc = l.valid.as_ref().map_or(f64::NAN, |m| m.auc);
        println!("epoch {:3}  loss {:.4}  valid auc {auc:.4}", l.epoch, l.train_loss);
    }
    let test = prepared.evaluate_test(&outcome.params)?;
    println!(
        "best epoch {} ({:.1}s)",
        outcome.best_epoch,
        start.elapsed().as_secs_f64()
    );

    let negs = prepared.test_negatives.as_ref().expect("test split is non-empty");
    let pos = score_pairs(
        &prepared.train_graph,
        HeuristicKind::CommonNeighbors,
        &dataset.splits.test_edges,
    )?;
    let neg = score_pairs(&prepared.train_graph, HeuristicKind::CommonNeighbors, negs.pairs())?;
    let cn = evaluate_scores(&pos, &neg, negs, &config.eval.hits_k)?;

    println!("{:<6} {:>8} {:>8} {:>8}", "", "auc", "mrr", "hits@50");
    for (name, m) in [("model", &test), ("cn", &cn)] {
        println!("{name:<6} {:>8.4} {:>8.4} {:>8.4}", m.auc, m.mrr, m.hits[&50]);
    }
    Ok(())
}
