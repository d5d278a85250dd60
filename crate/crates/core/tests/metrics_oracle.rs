mod common;

use common::*;
use gidn::metrics::{auc, hits_at_k, mrr};
use proptest::prelude::*;
use rand::Rng;

/// Scores drawn from a small grid so ties are common.
fn scores(r: &mut rand_chacha::ChaCha8Rng, len: usize, tie_heavy: bool) -> Vec<f64> {
    (0..len)
        .map(|_| {
            if tie_heavy {
                r.random_range(0..5) as f64 * 0.25
            } else {
                r.random_range(-3.0..3.0)
            }
        })
        .collect()
}

#[test]
fn random_score_sets_match_oracles() {
    let mut r = rng(9);
    for case in 0..100 {
        let tie_heavy = case % 2 == 0;
        let np = r.random_range(1..30);
        let nn = r.random_range(1..60);
        let pos = scores(&mut r, np, tie_heavy);
        let neg = scores(&mut r, nn, tie_heavy);
        for k in [1, 2, 5, 10, 50, 100] {
            assert_eq!(hits_at_k(&pos, &neg, k).unwrap(), sort_hits(&pos, &neg, k));
        }
        let q = r.random_range(1..12);
        let per_pos: Vec<Vec<f64>> = (0..np).map(|_| scores(&mut r, q, tie_heavy)).collect();
        assert_eq!(mrr(&pos, &per_pos).unwrap(), sort_mrr(&pos, &per_pos));
        assert!((auc(&pos, &neg).unwrap() - pairwise_auc(&pos, &neg)).abs() < 1e-12);
    }
}

#[test]
fn fifty_by_fifty_auc() {
    let mut r = rng(50);
    let pos = scores(&mut r, 50, false);
    let neg = scores(&mut r, 50, false);
    assert!((auc(&pos, &neg).unwrap() - pairwise_auc(&pos, &neg)).abs() < 1e-12);
}

#[test]
fn mrr_twenty_by_ten() {
    let mut r = rng(20);
    let pos = scores(&mut r, 20, false);
    let negs: Vec<Vec<f64>> = (0..20).map(|_| scores(&mut r, 10, false)).collect();
    assert_eq!(mrr(&pos, &negs).unwrap(), sort_mrr(&pos, &negs));
}

proptest! {
    #[test]
    fn hits_invariant_under_monotone_maps(
        pos in proptest::collection::vec(-24i32..24, 1..20),
        neg in proptest::collection::vec(-24i32..24, 1..40),
        k in 1usize..50,
    ) {
        // grid values keep the affine images exact, so no new ties appear
        let pos: Vec<f64> = pos.into_iter().map(|x| x as f64 / 8.0).collect();
        let neg: Vec<f64> = neg.into_iter().map(|x| x as f64 / 8.0).collect();
        let base = hits_at_k(&pos, &neg, k).unwrap();
        let exp = |v: &[f64]| v.iter().map(|x| x.exp()).collect::<Vec<_>>();
        let affine = |v: &[f64]| v.iter().map(|x| 4.0 * x - 3.0).collect::<Vec<_>>();
        prop_assert_eq!(hits_at_k(&exp(&pos), &exp(&neg), k).unwrap(), base);
        prop_assert_eq!(hits_at_k(&affine(&pos), &affine(&neg), k).unwrap(), base);
    }

    #[test]
    fn hits_monotone_in_k(
        pos in proptest::collection::vec(-3.0f64..3.0, 1..20),
        neg in proptest::collection::vec(-3.0f64..3.0, 1..40),
    ) {
        let mut prev = 0.0;
        for k in 1..=neg.len() + 2 {
            let h = hits_at_k(&pos, &neg, k).unwrap();
            prop_assert!(h >= prev);
            prop_assert!((0.0..=1.0).contains(&h));
            prev = h;
        }
        prop_assert_eq!(prev, 1.0);
    }
}
