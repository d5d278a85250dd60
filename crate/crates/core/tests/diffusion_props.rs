mod common;

use common::*;
use gidn::diffusion::{diffuse, diffuse_backward, hop_combine, inception_forward, BranchConfig, HopWeighting};
use gidn::model::{init_params, InputMode, LossKind, ModelConfig};
use gidn::{build_csr, build_transition, TransitionKind};
use ndarray::{s, Array2};
use proptest::prelude::*;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = proptest::collection::vec((0..n, 0..n), 0..(n * 2 + 1));
        (Just(n), pairs)
    })
}

fn kind_strategy() -> impl Strategy<Value = TransitionKind> {
    prop_oneof![
        Just(TransitionKind::Rw),
        Just(TransitionKind::Sym),
        Just(TransitionKind::Adj)
    ]
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn csr_invariants((n, edges) in graph_strategy(20)) {
        let g = build_csr(n, &edges).unwrap();
        let off = g.row_offsets();
        prop_assert_eq!(off[0], 0);
        prop_assert_eq!(off[n], g.col_targets().len());
        for u in 0..n {
            prop_assert!(off[u] <= off[u + 1]);
            let row = g.neighbors(u);
            prop_assert!(row.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!row.contains(&u));
            for &v in row {
                prop_assert!(g.has_edge(v, u));
            }
        }
        // re-ingesting the arc list reproduces the CSR arrays
        let arcs: Vec<_> = g.arcs().collect();
        prop_assert_eq!(build_csr(n, &arcs).unwrap(), g);
    }

    #[test]
    fn transition_matches_dense_construction((n, edges) in graph_strategy(20), kind in kind_strategy()) {
        let g = build_csr(n, &edges).unwrap();
        let t = build_transition(&g, kind);
        let dense = dense_transition(n, &edges, kind);
        prop_assert!(max_abs_diff(&t.to_dense(), &dense) <= 1e-15);
        prop_assert!(t.to_dense().iter().all(|x| x.is_finite() && *x >= 0.0));
    }

    #[test]
    fn rw_rows_stochastic_and_sym_symmetric((n, edges) in graph_strategy(30)) {
        let g = build_csr(n, &edges).unwrap();
        let rw = build_transition(&g, TransitionKind::Rw);
        for u in 0..n {
            let sum: f64 = rw.row_values(u).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        let sym = build_transition(&g, TransitionKind::Sym).to_dense();
        prop_assert_eq!(&sym, &sym.t().to_owned());
        let adj = build_transition(&g, TransitionKind::Adj);
        for u in 0..n {
            prop_assert!(adj.row_values(u).iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn diffusion_matches_dense_powers(
        (n, edges) in graph_strategy(20),
        kind in kind_strategy(),
        k in 0usize..=4,
        d in 1usize..=4,
        seed in any::<u64>(),
    ) {
        let g = build_csr(n, &edges).unwrap();
        let t = build_transition(&g, kind);
        let x = random_matrix(&mut rng(seed), n, d);
        let stack = diffuse(&t, x.view(), k).unwrap();
        let oracle = dense_power_diffusion(&dense_transition(n, &edges, kind), &x, k);
        prop_assert_eq!(stack.hops[0].clone(), x);
        for (h, o) in stack.hops.iter().zip(&oracle) {
            prop_assert!(max_abs_diff(h, o) < 1e-9);
        }
    }

    #[test]
    fn diffusion_is_linear(
        (n, edges) in graph_strategy(15),
        kind in kind_strategy(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let g = build_csr(n, &edges).unwrap();
        let t = build_transition(&g, kind);
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, 2);
        let y = random_matrix(&mut r, n, 2);
        let combo = &x * a + &y * b;
        let sx = diffuse(&t, x.view(), 3).unwrap();
        let sy = diffuse(&t, y.view(), 3).unwrap();
        let sc = diffuse(&t, combo.view(), 3).unwrap();
        for k in 0..=3 {
            let lin = &sx.hops[k] * a + &sy.hops[k] * b;
            prop_assert!(max_abs_diff(&sc.hops[k], &lin) < 1e-10);
        }
    }

    #[test]
    fn rw_preserves_constants((n, edges) in graph_strategy(20)) {
        // ensure no isolated nodes by adding a path
        let mut edges = edges;
        for u in 1..n.max(2) {
            edges.push((u - 1, u));
        }
        let n = n.max(2);
        let g = build_csr(n, &edges).unwrap();
        let t = build_transition(&g, TransitionKind::Rw);
        let ones = Array2::ones((n, 1));
        for h in diffuse(&t, ones.view(), 5).unwrap().hops {
            prop_assert!(h.iter().all(|x| (x - 1.0).abs() < 1e-10));
        }
    }

    #[test]
    fn hop_combine_is_convex(
        hops in proptest::collection::vec(matrix_strategy(4, 3), 1..5),
        logits_seed in any::<u64>(),
    ) {
        let k = hops.len();
        let logits: Vec<f64> = {
            use rand::Rng;
            let mut r = rng(logits_seed);
            (0..k).map(|_| r.random_range(-10.0..10.0)).collect()
        };
        let lo = hops.iter().flat_map(|h| h.iter()).fold(f64::INFINITY, |a, &b| a.min(b));
        let hi = hops.iter().flat_map(|h| h.iter()).fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let z = hop_combine(&gidn::diffusion::DiffusionStack { hops }, &logits).unwrap();
        prop_assert!(z.iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
    }

    #[test]
    fn backward_is_adjoint_of_forward(
        (n, edges) in graph_strategy(15),
        kind in kind_strategy(),
        k in 0usize..=3,
        seed in any::<u64>(),
    ) {
        // ⟨Σ_k ⟨G(k), H(k)⟩⟩ = ⟨X, backward(G)⟩
        let g = build_csr(n, &edges).unwrap();
        let t = build_transition(&g, kind);
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, 2);
        let grads: Vec<_> = (0..=k).map(|_| random_matrix(&mut r, n, 2)).collect();
        let stack = diffuse(&t, x.view(), k).unwrap();
        let lhs: f64 = stack.hops.iter().zip(&grads).map(|(h, g)| (h * g).sum()).sum();
        let rhs = (&x * &diffuse_backward(&t, &grads).unwrap()).sum();
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }
}

fn identity_config(n: usize, d: usize, branches: Vec<BranchConfig>) -> ModelConfig {
    ModelConfig {
        num_nodes: n,
        branches,
        hop_weights: HopWeighting::Scalar,
        input: InputMode::Features,
        feature_dim: d,
        embedding_dim: 0,
        hidden: 2,
        loss: LossKind::Bce,
    }
}

#[test]
fn degenerate_inception_returns_input() {
    let g = build_csr(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let x = random_matrix(&mut rng(1), 4, 3);
    let cfg = identity_config(4, 3, vec![BranchConfig::new(TransitionKind::Sym, 0, 3)]);
    let mut params = init_params(&cfg, 0).unwrap();
    params.projections[0] = Array2::eye(3);
    let out = inception_forward(&g, &x, &cfg.branches, &params).unwrap();
    assert!(max_abs_diff(&out, &x) == 0.0);
}

#[test]
fn inception_concatenates_branches() {
    let g = build_csr(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
    let x = random_matrix(&mut rng(2), 5, 3);
    let branches = vec![
        BranchConfig::new(TransitionKind::Sym, 1, 4),
        BranchConfig::new(TransitionKind::Rw, 2, 8),
    ];
    let cfg = identity_config(5, 3, branches.clone());
    let params = init_params(&cfg, 4).unwrap();
    let out = inception_forward(&g, &x, &branches, &params).unwrap();
    assert_eq!(out.ncols(), 12);
    let t = build_transition(&g, TransitionKind::Sym);
    let stack = diffuse(&t, x.dot(&params.projections[0]).view(), 1).unwrap();
    let first = hop_combine(&stack, &[0.0, 0.0]).unwrap();
    assert_eq!(out.slice(s![.., 0..4]).to_owned(), first);
}

#[test]
fn edgeless_inception_is_projection() {
    let g = build_csr(3, &[]).unwrap();
    let x = random_matrix(&mut rng(3), 3, 2);
    let cfg = identity_config(3, 2, vec![BranchConfig::new(TransitionKind::Sym, 2, 2)]);
    let params = init_params(&cfg, 0).unwrap();
    let out = inception_forward(&g, &x, &cfg.branches, &params).unwrap();
    assert!(max_abs_diff(&out, &x.dot(&params.projections[0])) < 1e-15);
}

#[test]
fn inception_rejects_empty_bank() {
    let g = build_csr(3, &[]).unwrap();
    let x = Array2::zeros((3, 2));
    let cfg = identity_config(3, 2, vec![BranchConfig::new(TransitionKind::Sym, 1, 2)]);
    let params = init_params(&cfg, 0).unwrap();
    assert!(inception_forward(&g, &x, &[], &params).is_err());
}
