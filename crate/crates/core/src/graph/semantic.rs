use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix};
use crate::scalar::Scalar;

use super::operators::topo_laplacian;

pub const DEFAULT_K_SEM: usize = 10;

/// Symmetric kNN cosine-similarity graph over feature rows.
///
/// Each row keeps its `k_sem` most similar other rows (ties broken by lower
/// index) among those with strictly positive similarity, clamped to at most 1.
/// The result is symmetrized by `s_ij = max(s_ij, s_ji)` and has a zero diagonal.
/// Rows with zero norm have no neighbours.
pub fn semantic_similarity<T: Scalar>(x: &DenseMatrix<T>, k_sem: usize) -> Result<SparseMatrix<T>> {
    let (n, d) = x.shape();
    if k_sem == 0 {
        return Err(Error::InvalidInput("semantic graph needs k >= 1".into()));
    }
    if n < k_sem + 1 {
        return Err(Error::InvalidInput(format!("semantic graph with k = {k_sem} needs at least {} nodes, got {n}", k_sem + 1)));
    }

    // Inverted index: for each feature column, the rows where it is nonzero.
    let mut postings: Vec<Vec<(usize, T)>> = vec![Vec::new(); d];
    let mut norms = vec![T::zero(); n];
    for i in 0..n {
        let mut sq = T::zero();
        for (c, &v) in x.row(i).iter().enumerate() {
            if v != T::zero() {
                postings[c].push((i, v));
                sq += v * v;
            }
        }
        norms[i] = sq.sqrt();
    }
    let zero_rows = norms.iter().filter(|&&v| v == T::zero()).count();
    if zero_rows > 0 {
        log::warn!("semantic graph: {zero_rows} feature rows have zero norm and are left isolated");
    }

    let mut acc = vec![T::zero(); n];
    let mut seen = vec![false; n];
    let mut touched = Vec::new();
    let mut triplets = Vec::new();
    let mut candidates: Vec<(T, usize)> = Vec::new();
    for i in 0..n {
        if norms[i] == T::zero() {
            continue;
        }
        for (c, &v) in x.row(i).iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            for &(j, w) in &postings[c] {
                if !seen[j] {
                    seen[j] = true;
                    touched.push(j);
                }
                acc[j] += v * w;
            }
        }
        candidates.clear();
        for &j in &touched {
            if j != i {
                let s = acc[j] / (norms[i] * norms[j]);
                if s > T::zero() {
                    candidates.push((s.min(T::one()), j));
                }
            }
            acc[j] = T::zero();
            seen[j] = false;
        }
        touched.clear();
        candidates.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        for &(s, j) in candidates.iter().take(k_sem) {
            triplets.push((i, j, s));
        }
    }

    let directed = SparseMatrix::from_triplets(n, n, triplets)?;
    let transposed = directed.transpose();
    let mut sym = Vec::with_capacity(2 * directed.nnz());
    for i in 0..n {
        let (cols_a, vals_a) = directed.row(i);
        let (cols_b, vals_b) = transposed.row(i);
        let (mut p, mut q) = (0, 0);
        while p < cols_a.len() || q < cols_b.len() {
            let ca = cols_a.get(p).copied().unwrap_or(usize::MAX);
            let cb = cols_b.get(q).copied().unwrap_or(usize::MAX);
            if ca == cb {
                sym.push((i, ca, vals_a[p].max(vals_b[q])));
                p += 1;
                q += 1;
            } else if ca < cb {
                sym.push((i, ca, vals_a[p]));
                p += 1;
            } else {
                sym.push((i, cb, vals_b[q]));
                q += 1;
            }
        }
    }
    SparseMatrix::from_triplets(n, n, sym)
}

/// `L̃_X = I − D^{-1/2} S D^{-1/2}` for the similarity graph of
/// [`semantic_similarity`]; isolated nodes get a zero row.
pub fn semantic_laplacian<T: Scalar>(x: &DenseMatrix<T>, k_sem: usize) -> Result<SparseMatrix<T>> {
    topo_laplacian(&semantic_similarity(x, k_sem)?)
}
