//! Compares the analytic gradients of a small model against central finite
//! differences of the loss, group by group.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use gidn::diffusion::{BranchConfig, BranchOperators, HopWeighting};
use gidn::model::{backward, batch_loss, init_params, InputMode, LinkBatch, LossKind, ModelConfig, ModelParams};
use gidn::{build_csr, TransitionKind};

fn main() -> gidn::Result<()> {
    let graph = build_csr(8, &[(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (2, 5)])?;
    let config = ModelConfig {
        num_nodes: 8,
        branches: vec![
            BranchConfig::new(TransitionKind::Sym, 1, 3),
            BranchConfig::new(TransitionKind::Rw, 2, 2),
        ],
        hop_weights: HopWeighting::Channel,
        input: InputMode::Embeddings,
        feature_dim: 0,
        embedding_dim: 4,
        hidden: 5,
        loss: LossKind::Bce,
    };
    let mut params = init_params(&config, 11)?;
    // move hop logits off their symmetric zero start
    for (i, x) in params.hop_logits.iter_mut().flatten().enumerate() {
        *x = 0.1 * i as f64 - 0.4;
    }
    let batch = LinkBatch::new(vec![(0, 2), (4, 6)], vec![(0, 7), (1, 6), (3, 4), (2, 7)])?;

    let analytic = backward(&graph, None, &config, &params, &batch)?;
    let ops = BranchOperators::new(&graph, &config.branches)?;
    let loss = |p: &ModelParams| batch_loss(&ops, &config, None, p, &batch);
    let h = 1e-5;

    println!("{:<14} {:>6} {:>12}", "group", "size", "rel. error");
    let n_groups = params.groups().len();
    for gi in 0..n_groups {
        let (name, grad, _) = &analytic.groups()[gi];
        let mut num = vec![0.0; grad.len()];
        for (i, slot) in num.iter_mut().enumerate() {
            let mut plus = params.clone();
            plus.groups_mut()[gi].1[i] += h;
            let mut minus = params.clone();
            minus.groups_mut()[gi].1[i] -= h;
            *slot = (loss(&plus)? - loss(&minus)?) / (2.0 * h);
        }
        let diff: f64 = grad.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        println!("{name:<14} {:>6} {:>12.2e}", grad.len(), diff / scale);
    }
    Ok(())
}
