//! Scores candidate links on a small graph with every classical heuristic.
//!
//! ```bash
//! cargo run --example heuristics
//! ```

use gidn::build_csr;
use gidn::heuristics::{score_pairs, HeuristicKind};

fn main() -> gidn::Result<()> {
    // two triangles sharing node 2, plus a pendant node 5
    let graph = build_csr(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4), (4, 5)])?;
    let pairs = [(0, 3), (0, 4), (1, 5), (3, 5), (0, 5)];
    let kinds: [HeuristicKind; 4] = ["cn", "aa", "rpr:0.85", "simrank:0.8:5"].map(|s| s.parse().expect("valid kind"));

    print!("{:<8}", "pair");
    for k in &kinds {
        print!("{:>26}", k.to_string());
    }
    println!();
    let scores: Vec<Vec<f64>> = kinds
        .iter()
        .map(|&k| score_pairs(&graph, k, &pairs))
        .collect::<gidn::Result<_>>()?;
    for (i, (u, v)) in pairs.iter().enumerate() {
        print!("{:<8}", format!("({u}, {v})"));
        for s in &scores {
            print!("{:>26.4}", s[i]);
        }
        println!();
    }
    Ok(())
}
