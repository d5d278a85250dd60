//! Samples uniform random walks, derives co-occurrence edges and applies
//! edge dropout, the two structural augmentations used during training.
//!
//! ```bash
//! cargo run --example random_walks
//! ```

use gidn::augment::{cooccurrence_augment, cooccurrence_counts, edge_dropout, sample_walks};
use gidn::build_csr;
use gidn::synth::planted_cliques;

fn main() -> gidn::Result<()> {
    // three 6-cliques in a chain, with every clique missing one internal edge
    let (n, mut edges) = planted_cliques(3, 6);
    edges.retain(|&(u, v)| !(v == u + 1 && u % 6 == 1));
    let graph = build_csr(n, &edges)?;

    let walks = sample_walks(&graph, 8, 4, 42)?;
    println!("{} walks; first three:", walks.walks.len());
    for w in walks.walks.iter().take(3) {
        println!("  {w:?}");
    }

    let counts = cooccurrence_counts(&walks, 2);
    let mut top: Vec<_> = counts.iter().filter(|(&(u, v), _)| !graph.has_edge(u, v)).collect();
    top.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    println!(
        "most frequent non-edges within window 2: {:?}",
        &top[..5.min(top.len())]
    );

    let added = cooccurrence_augment(&graph, &walks, 2, 6)?;
    println!("co-occurrence edges added at tau 6: {added:?}");

    let mut view = edge_dropout(&graph, 0.2, 7)?;
    view.add_edges(&added);
    let effective = view.effective_graph();
    println!(
        "base {} edges -> dropped {}, added {}, effective {}",
        graph.num_edges(),
        view.dropped_edges.len(),
        view.added_edges.len(),
        effective.num_edges()
    );
    Ok(())
}
