#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use reglgcn::random::{seeded, Rng as ChaRng};
use reglgcn::{DenseMatrix, SparseMatrix};

pub fn to_na(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.n_rows(), m.n_cols(), m.values())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn na_diff(a: &DenseMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (to_na(a) - b).abs().max()
}

pub fn rng(seed: u64) -> ChaRng {
    seeded(seed)
}

pub fn uniform_matrix(rows: usize, cols: usize, rng: &mut ChaRng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_sparse(rows: usize, cols: usize, density: f64, rng: &mut ChaRng) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if rng.random::<f64>() < density {
                t.push((i, j, rng.random_range(-2.0..2.0)));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, t).unwrap()
}

/// Symmetric nonnegative adjacency without self-loops; edges appear with probability `p`.
pub fn random_graph(n: usize, p: f64, rng: &mut ChaRng) -> SparseMatrix<f64> {
    let mut t = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                let w = rng.random_range(0.5..1.5);
                t.push((i, j, w));
                t.push((j, i, w));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, t).unwrap()
}

pub fn path_graph(n: usize) -> SparseMatrix<f64> {
    let t = (0..n - 1).flat_map(|i| [(i, i + 1, 1.0), (i + 1, i, 1.0)]);
    SparseMatrix::from_triplets(n, n, t).unwrap()
}

pub fn cycle_graph(n: usize) -> SparseMatrix<f64> {
    let t = (0..n).flat_map(|i| {
        let j = (i + 1) % n;
        [(i, j, 1.0), (j, i, 1.0)]
    });
    SparseMatrix::from_triplets(n, n, t).unwrap()
}

/// Nonnegative sparse-ish feature rows.
pub fn random_features(n: usize, d: usize, rng: &mut ChaRng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(n, d, |_, _| if rng.random::<f64>() < 0.5 { rng.random::<f64>() } else { 0.0 })
}

/// `G Gᵀ` for a Gaussian `n × k` factor: PSD with rank `min(n, k)`.
pub fn random_psd(n: usize, k: usize, rng: &mut ChaRng) -> DenseMatrix<f64> {
    let g = uniform_matrix(n, k, rng);
    g.matmul_t(&g).unwrap()
}

/// PSD matrix with prescribed spectrum in a random orthonormal basis.
pub fn psd_with_spectrum(spectrum: &[f64], rng: &mut ChaRng) -> DenseMatrix<f64> {
    let n = spectrum.len();
    let q = to_na(&uniform_matrix(n, n, rng)).qr().q();
    let m = &q * DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(spectrum)) * q.transpose();
    let sym = (&m + m.transpose()) * 0.5;
    from_na(&sym)
}

pub fn dense_inverse_oracle(m: &DenseMatrix<f64>) -> DMatrix<f64> {
    to_na(m).try_inverse().expect("oracle inverse")
}

/// Descending eigenvalues from nalgebra.
pub fn eigenvalues_desc(m: &DenseMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = to_na(m).symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| b.partial_cmp(a).unwrap());
    e
}
