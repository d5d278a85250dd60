//! Trains the inception diffusion model on two bridged cliques and prints
//! the learning curve and test metrics.
//!
//! ```bash
//! cargo run --release --example train_two_cliques
//! ```

use gidn::config::RunConfig;
use gidn::diffusion::BranchConfig;
use gidn::harness::{train_prepared, Dataset, Prepared};
use gidn::synth::{planted_cliques, random_split};
use gidn::TransitionKind;

fn main() -> gidn::Result<()> {
    let (n, edges) = planted_cliques(2, 20);
    let dataset = Dataset::new(random_split(n, &edges, 0.05, 0.05, 3)?, None)?;

    let mut config = RunConfig::default();
    config.model.branches = vec![
        BranchConfig::new(TransitionKind::Sym, 1, 8),
        BranchConfig::new(TransitionKind::Sym, 2, 8),
        BranchConfig::new(TransitionKind::Rw, 3, 8),
    ];
    config.model.embedding_dim = 16;
    config.model.hidden = 16;
    config.train.epochs = 200;
    config.train.batch_size = 64;
    config.train.eval_every = 20;

    let prepared = Prepared::new(&config, &dataset)?;
    let outcome = train_prepared(&prepared, 0)?;
    for l in &outcome.log {
        if let Some(m) = &l.valid {
            println!(
                "epoch {:3}  loss {:.4}  valid auc {:.4}  mrr {:.4}",
                l.epoch, l.train_loss, m.auc, m.mrr
            );
        }
    }
    let test = prepared.evaluate_test(&outcome.params)?;
    println!(
        "best epoch {}: test auc {:.4}, mrr {:.4}, hits {:?}",
        outcome.best_epoch, test.auc, test.mrr, test.hits
    );

    let w = gidn::diffusion::hop_softmax(outcome.params.hop_logits[2].view());
    println!("learned hop weights of the rw:3 branch: {:?}", w.column(0).to_vec());
    Ok(())
}
