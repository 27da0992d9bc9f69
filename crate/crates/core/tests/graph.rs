mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use reglgcn::graph::{
    hat_laplacian, load_dataset, normalize_adjacency, semantic_laplacian, semantic_similarity, spectral_radius,
    topo_laplacian, write_dataset,
};
use reglgcn::{DenseMatrix, SparseMatrix};

/// All-pairs cosine similarities, per-row top-k of the positive ones with ties
/// to the lower index, clamped to 1, then `max(s_ij, s_ji)`.
fn brute_force_similarity(x: &DenseMatrix<f64>, k: usize) -> DenseMatrix<f64> {
    let n = x.n_rows();
    let norm = |i: usize| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut s = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut cand: Vec<(usize, f64)> = (0..n)
            .filter(|&j| j != i && norm(i) > 0.0 && norm(j) > 0.0)
            .map(|j| {
                let dot: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum();
                (j, (dot / (norm(i) * norm(j))).min(1.0))
            })
            .filter(|&(_, c)| c > 0.0)
            .collect();
        cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for &(j, c) in cand.iter().take(k) {
            s[(i, j)] = c;
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| s[(i, j)].max(s[(j, i)]))
}

/// `I − D^{-1/2} S D^{-1/2}` with a zero row for isolated nodes.
fn dense_normalized_laplacian(s: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let n = s.n_rows();
    let deg: Vec<f64> = (0..n).map(|i| s.row(i).iter().sum()).collect();
    DenseMatrix::from_fn(n, n, |i, j| {
        if deg[i] == 0.0 || deg[j] == 0.0 {
            return 0.0;
        }
        let id = if i == j { 1.0 } else { 0.0 };
        id - s[(i, j)] / (deg[i] * deg[j]).sqrt()
    })
}

fn min_rayleigh_quotient(m: &SparseMatrix<f64>, probes: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = m.n_rows();
    (0..probes)
        .map(|_| {
            let v = uniform_matrix(n, 1, &mut r);
            let mv = m.spmm(&v).unwrap();
            v.inner(&mv).unwrap() / v.inner(&v).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn path_laplacian_spectrum() {
    let a = path_graph(6);
    let l = topo_laplacian(&a).unwrap().to_dense();
    let eig = eigenvalues_desc(&l);
    assert!(eig.iter().all(|&e| (-1e-12..=2.0 + 1e-12).contains(&e)));
    assert!(eig[5].abs() < 1e-12);
    let sqrt_deg = DenseMatrix::from_fn(6, 1, |i, _| if i == 0 || i == 5 { 1.0 } else { 2f64.sqrt() });
    assert!(l.matmul(&sqrt_deg).unwrap().max_abs() < 1e-12);
}

#[test]
fn semantic_seed_5_matches_brute_force() {
    let x = random_features(8, 6, &mut rng(5));
    let s = semantic_similarity(&x, 3).unwrap();
    let oracle = brute_force_similarity(&x, 3);
    assert!(s.to_dense().max_abs_diff(&oracle) < 1e-14);
    let l = semantic_laplacian(&x, 3).unwrap();
    assert!(l.to_dense().max_abs_diff(&dense_normalized_laplacian(&oracle)) < 1e-14);
}

#[test]
fn dataset_round_trips_through_files() {
    let dir = std::env::temp_dir().join(format!("reglgcn-graph-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (c, e) = (dir.join("toy.content"), dir.join("toy.cites"));
    std::fs::write(&c, "n1\t1\t0\ta\nn2\t0.5\t0.25\tb\nn3\t0\t2\ta\n").unwrap();
    std::fs::write(&e, "n1\tn2\nn2\tn3\nn3\tn2\n").unwrap();
    let ds = load_dataset::<f64>(&c, &e).unwrap();
    assert_eq!((ds.n_nodes(), ds.n_edges(), ds.n_classes(), ds.n_features()), (3, 2, 2, 2));
    let (c2, e2) = (dir.join("out.content"), dir.join("out.cites"));
    write_dataset(&ds, &c2, &e2).unwrap();
    let back = load_dataset::<f64>(&c2, &e2).unwrap();
    assert_eq!(back.features, ds.features);
    assert_eq!(back.labels, ds.labels);
    assert_eq!(back.node_ids, ds.node_ids);
    assert_eq!(back.adjacency, ds.adjacency);
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_adjacency_spectral_radius_at_most_one(seed in 0u64..10_000, n in 2usize..50, p in 0.0f64..0.5, loops: bool) {
        let a = random_graph(n, p, &mut rng(seed));
        let norm = normalize_adjacency(&a, loops).unwrap();
        prop_assert!(spectral_radius(&norm, 200, seed) <= 1.0 + 1e-8);
        prop_assert!(eigenvalues_desc(&norm.to_dense())[0] <= 1.0 + 1e-10);
    }

    #[test]
    fn laplacians_are_symmetric_psd(seed in 0u64..10_000, n in 4usize..40, p in 0.0f64..0.5) {
        let mut r = rng(seed);
        let a = random_graph(n, p, &mut r);
        let x = random_features(n, 5, &mut r);
        for l in [topo_laplacian(&a).unwrap(), hat_laplacian(&a).unwrap(), semantic_laplacian(&x, 3).unwrap()] {
            prop_assert!(l.max_asymmetry() <= 1e-12);
            prop_assert!(min_rayleigh_quotient(&l, 100, seed) >= -1e-10);
        }
    }

    #[test]
    fn semantic_graph_equals_brute_force(seed in 0u64..10_000, n in 2usize..64, d in 1usize..12, k in 1usize..6) {
        prop_assume!(n > k);
        let mut r = rng(seed);
        // Integer-valued features make exact cosine ties common.
        let x = DenseMatrix::from_fn(n, d, |_, _| r.random_range(0..3) as f64);
        let oracle = brute_force_similarity(&x, k);
        let s = semantic_similarity(&x, k).unwrap();
        prop_assert!(s.to_dense().max_abs_diff(&oracle) < 1e-14);
        let pattern: Vec<(usize, usize)> = s.triplets().map(|(i, j, _)| (i, j)).collect();
        let oracle_pattern: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| oracle[(i, j)] != 0.0).collect();
        prop_assert_eq!(pattern, oracle_pattern);
        let l = semantic_laplacian(&x, k).unwrap();
        prop_assert!(l.to_dense().max_abs_diff(&dense_normalized_laplacian(&oracle)) < 1e-13);
    }
}
