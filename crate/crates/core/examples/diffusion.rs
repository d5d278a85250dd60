//! Diffuses a one-hot signal over a path graph with each transition kind and
//! mixes the hops with softmax weights.
//!
//! ```bash
//! cargo run --example diffusion
//! ```

use gidn::diffusion::{diffuse, hop_combine, hop_softmax};
use gidn::{build_csr, build_transition, TransitionKind};
use ndarray::{Array2, ArrayView2};

fn main() -> gidn::Result<()> {
    // path 0 - 1 - 2 - 3 - 4, signal on node 0
    let graph = build_csr(5, &[(0, 1), (1, 2), (2, 3), (3, 4)])?;
    let mut x = Array2::zeros((5, 1));
    x[[0, 0]] = 1.0;

    for kind in [TransitionKind::Rw, TransitionKind::Sym, TransitionKind::Adj] {
        let t = build_transition(&graph, kind);
        let stack = diffuse(&t, x.view(), 3)?;
        println!("{kind}:");
        for (k, h) in stack.hops.iter().enumerate() {
            let row: Vec<String> = h.column(0).iter().map(|v| format!("{v:6.3}")).collect();
            println!("  H({k}) = [{}]", row.join(" "));
        }
        // only RW rows sum to one, so only RW maps a constant signal to itself
        let ones = Array2::ones((5, 1));
        let t1 = t.matmul(ones.view())?;
        println!(
            "  T·1 = {:?}",
            t1.column(0).iter().map(|v| (v * 1e3).round() / 1e3).collect::<Vec<_>>()
        );
    }

    let t = build_transition(&graph, TransitionKind::Rw);
    let stack = diffuse(&t, x.view(), 3)?;
    let logits = [0.0, 1.0, 0.5, -1.0];
    let w = hop_softmax(ArrayView2::from_shape((4, 1), &logits).expect("column"));
    let mixed = hop_combine(&stack, &logits)?;
    println!("hop weights {:?}", w.column(0).to_vec());
    println!("mixed       {:?}", mixed.column(0).to_vec());
    Ok(())
}
