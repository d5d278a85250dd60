//! Saves a trained model, reloads it and checks that the reloaded weights
//! and RNG position reproduce the original exactly.
//!
//! ```bash
//! cargo run --example checkpoint
//! ```

use gidn::checkpoint::Checkpoint;
use gidn::config::RunConfig;
use gidn::harness::{train_prepared, Dataset, Prepared};
use gidn::synth::{planted_cliques, random_split};
use rand::RngCore;

fn main() -> gidn::Result<()> {
    let (n, edges) = planted_cliques(3, 8);
    let dataset = Dataset::new(random_split(n, &edges, 0.1, 0.1, 1)?, None)?;
    let config = RunConfig::from_toml_with_overrides(
        "[model]\nembedding_dim = 8\nhidden = 8\n[train]\nepochs = 20\n",
        &["model.branches=[{kind=\"sym\", depth=2, out_dim=4}]".to_string()],
    )?;

    let prepared = Prepared::new(&config, &dataset)?;
    let outcome = train_prepared(&prepared, 7)?;
    let ckpt = Checkpoint {
        model: outcome.model.clone(),
        run_config: Some(config.to_toml()?),
        seed: Some(7),
        params: outcome.params.clone(),
        rng: outcome.rng,
    };
    let path = std::env::temp_dir().join("gidn-example.ckpt");
    ckpt.save(&path)?;
    let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    let back = Checkpoint::load(&path)?;
    println!(
        "wrote {} ({size} bytes, {} scalars)",
        path.display(),
        back.params.num_scalars()
    );

    let before = prepared.evaluate_test(&outcome.params)?;
    let after = prepared.evaluate_test(&back.params)?;
    println!(
        "test auc before {:.6}, after {:.6}, identical: {}",
        before.auc,
        after.auc,
        before == after
    );
    let (mut a, mut b) = (outcome.rng.restore(), back.rng.restore());
    println!("rng resumes at the same position: {}", a.next_u64() == b.next_u64());
    println!("stored config:\n{}", back.run_config.unwrap_or_default());
    std::fs::remove_file(&path).ok();
    Ok(())
}
