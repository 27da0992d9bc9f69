mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use reglgcn::graph::{topo_laplacian, GraphOperators};
use reglgcn::linalg::dense_inverse;
use reglgcn::lowrank::{
    assemble_factor, build_tsgcn_operator, joint_laplacian, top_r_eigs, woodbury_apply, EigOptions, LowRankOperator,
};
use reglgcn::{DenseMatrix, LinearOperator};

fn thorough() -> EigOptions {
    EigOptions {
        tol: 1e-10,
        max_iter: 20_000,
        oversample: 2,
        check_every: 1,
        ..Default::default()
    }
}

fn full_rank() -> EigOptions {
    EigOptions {
        tol: 1e-12,
        max_iter: 2000,
        oversample: 0,
        check_every: 1,
        strict: true,
        ..Default::default()
    }
}

/// Spectrum with relative gap above `min_gap` at position `r`.
fn gapped_spectrum(n: usize, r: usize, min_gap: f64, r_: &mut reglgcn::random::Rng) -> Vec<f64> {
    let mut s: Vec<f64> = (0..n).map(|_| r_.random_range(0.0..1.0)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if s[r - 1] <= min_gap * s[r] {
        let shift = min_gap * s[r] / s[r - 1] * 1.01;
        for v in &mut s[..r] {
            *v *= shift;
        }
    }
    s
}

#[test]
fn cycle_laplacian_top_three() {
    let m = topo_laplacian(&cycle_graph(8)).unwrap().scale(0.7);
    let state = top_r_eigs(&m, 3, &thorough()).unwrap();
    let oracle = eigenvalues_desc(&m.to_dense());
    for (got, want) in state.eigenvalues.iter().zip(&oracle) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn factor_is_the_best_rank_r_approximation() {
    let m = random_psd(10, 10, &mut rng(4));
    let state = top_r_eigs(&m, 4, &thorough()).unwrap();
    let op = assemble_factor(&state).unwrap();
    let wv = op.w.matmul_t(&op.v).unwrap();
    let eig = to_na(&m).symmetric_eigen();
    let mut order: Vec<usize> = (0..10).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut m_r = nalgebra::DMatrix::zeros(10, 10);
    for &i in &order[..4] {
        let v = eig.eigenvectors.column(i);
        m_r += eig.eigenvalues[i] * v * v.transpose();
    }
    let tail = (to_na(&m) - &m_r).norm();
    assert!((to_na(&wv) - &m_r).norm() <= tail + 1e-8);
    assert!((to_na(&m) - to_na(&wv)).norm() <= tail + 1e-8);
}

#[test]
fn woodbury_rank_three_matches_dense_inverse() {
    let mut r = rng(12);
    let w = uniform_matrix(12, 3, &mut r);
    let d = DenseMatrix::from_diagonal(&[0.5, 1.0, 2.0]);
    let v = w.matmul(&d).unwrap();
    let h = uniform_matrix(12, 4, &mut r);
    let op = LowRankOperator::from_factors(w.clone(), v.clone()).unwrap();
    let system = DenseMatrix::identity(12).add(&w.matmul_t(&v).unwrap()).unwrap();
    let oracle = dense_inverse_oracle(&system) * to_na(&h);
    assert!(na_diff(&woodbury_apply(&op, &h).unwrap(), &oracle) < 1e-8);
}

#[test]
fn toy_graph_full_rank_equals_exact() {
    let mut r = rng(8);
    let a = random_graph(8, 0.5, &mut r);
    let x = random_features(8, 5, &mut r);
    let ops = GraphOperators::build(&a, &x, 3).unwrap();
    let h = uniform_matrix(8, 3, &mut r);
    let low = build_tsgcn_operator(&ops, 0.5, 0.5, 8, false, &full_rank()).unwrap();
    let exact = build_tsgcn_operator(&ops, 0.5, 0.5, 8, true, &full_rank()).unwrap();
    assert!(low.apply(&h).unwrap().max_abs_diff(&exact.apply(&h).unwrap()) < 1e-6);
}

#[test]
fn zero_weights_give_identity() {
    let mut r = rng(9);
    let a = random_graph(10, 0.4, &mut r);
    let x = random_features(10, 4, &mut r);
    let ops = GraphOperators::build(&a, &x, 3).unwrap();
    let h = uniform_matrix(10, 2, &mut r);
    for exact in [false, true] {
        let op = build_tsgcn_operator(&ops, 0.0, 0.0, 3, exact, &EigOptions::default()).unwrap();
        assert!(op.apply(&h).unwrap().max_abs_diff(&h) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn eigenvalues_match_dense_oracle(seed in 0u64..10_000, n in 4usize..=64, r in 1usize..8) {
        prop_assume!(r < n);
        let mut g = rng(seed);
        let spectrum = gapped_spectrum(n, r, 1.01, &mut g);
        let m = psd_with_spectrum(&spectrum, &mut g);
        let state = top_r_eigs(&m, r, &thorough()).unwrap();
        let oracle = eigenvalues_desc(&m);
        for (got, want) in state.eigenvalues.iter().zip(&oracle) {
            prop_assert!((got - want).abs() < 1e-6, "{} vs {}", got, want);
        }
        let hist = &state.residual_history;
        prop_assert!(hist.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn woodbury_matches_dense_inverse(seed in 0u64..10_000, n in 1usize..=50, r in 0usize..=8) {
        prop_assume!(r <= n);
        let mut g = rng(seed);
        let w = uniform_matrix(n, r, &mut g);
        let h = uniform_matrix(n, 3, &mut g);
        let op = LowRankOperator::from_factors(w.clone(), w.clone()).unwrap();
        let system = DenseMatrix::identity(n).add(&w.matmul_t(&w).unwrap()).unwrap();
        let oracle = dense_inverse_oracle(&system) * to_na(&h);
        prop_assert!(na_diff(&woodbury_apply(&op, &h).unwrap(), &oracle) < 1e-8);
    }

    #[test]
    fn woodbury_is_linear(seed in 0u64..10_000, n in 2usize..30, r in 1usize..5, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        prop_assume!(r <= n);
        let mut g = rng(seed);
        let w = uniform_matrix(n, r, &mut g);
        let op = LowRankOperator::from_factors(w.clone(), w).unwrap();
        let x = uniform_matrix(n, 2, &mut g);
        let y = uniform_matrix(n, 2, &mut g);
        let lhs = woodbury_apply(&op, &x.scale(a).add(&y.scale(b)).unwrap()).unwrap();
        let rhs = woodbury_apply(&op, &x).unwrap().scale(a).add(&woodbury_apply(&op, &y).unwrap().scale(b)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn truncation_error_shrinks_with_rank(seed in 0u64..10_000, n in 3usize..20) {
        let mut g = rng(seed);
        let spectrum: Vec<f64> = (0..n).map(|i| 2.0 * 0.8f64.powi(i as i32)).collect();
        let m = psd_with_spectrum(&spectrum, &mut g);
        let h = uniform_matrix(n, 2, &mut g);
        let exact = dense_inverse(&m.add(&DenseMatrix::identity(n)).unwrap()).unwrap().matmul(&h).unwrap();
        let mut previous = f64::INFINITY;
        for r in 1..=n {
            let state = top_r_eigs(&m, r, &thorough()).unwrap();
            let approx = woodbury_apply(&assemble_factor(&state).unwrap(), &h).unwrap();
            let err = approx.sub(&exact).unwrap().frobenius_norm();
            prop_assert!(err <= previous + 1e-9);
            previous = err;
        }
        prop_assert!(previous < 1e-8);
    }

    #[test]
    fn full_rank_path_equals_exact_inverse(seed in 0u64..10_000, n in 5usize..=32, alpha in 0.0f64..2.0, beta in 0.0f64..2.0) {
        let mut g = rng(seed);
        let a = random_graph(n, 0.3, &mut g);
        let x = random_features(n, 5, &mut g);
        let ops = GraphOperators::build(&a, &x, 3).unwrap();
        let h = uniform_matrix(n, 3, &mut g);
        let low = build_tsgcn_operator(&ops, alpha, beta, n, false, &full_rank()).unwrap();
        let exact = build_tsgcn_operator(&ops, alpha, beta, n, true, &full_rank()).unwrap();
        prop_assert!(low.apply(&h).unwrap().max_abs_diff(&exact.apply(&h).unwrap()) < 1e-6);
        let joint = joint_laplacian(&ops, alpha, beta).unwrap().shifted(1.0, 1.0).unwrap().to_dense();
        let oracle = dense_inverse_oracle(&joint) * to_na(&h);
        prop_assert!(na_diff(&exact.apply(&h).unwrap(), &oracle) < 1e-10);
        prop_assert!(dense_inverse(&joint).is_ok());
    }
}
