use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix, LinearOperator, SparseMatrix};
use crate::random::{gaussian_matrix, seeded};
use crate::scalar::Scalar;

use super::semantic::semantic_laplacian;

/// Largest tolerated `|a_ij − a_ji|` for an input adjacency.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

fn check_adjacency<T: Scalar>(a: &SparseMatrix<T>) -> Result<()> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::shape("normalize_adjacency", "square adjacency", format!("{}x{}", a.n_rows(), a.n_cols())));
    }
    if let Some((i, j, v)) = a.triplets().find(|&(_, _, v)| !(v >= T::zero())) {
        return Err(Error::InvalidInput(format!("adjacency entry ({i}, {j}) = {v} is negative or NaN")));
    }
    if let Some((i, _, _)) = a.triplets().find(|&(i, j, _)| i == j) {
        return Err(Error::InvalidInput(format!("adjacency has a self-loop at node {i}")));
    }
    let asym = a.max_asymmetry().as_f64();
    if asym > SYMMETRY_TOLERANCE {
        return Err(Error::InvalidInput(format!("adjacency is not symmetric (max asymmetry {asym:e})")));
    }
    Ok(())
}

/// `D^{-1/2} M D^{-1/2}` with `M = a` (`add_self_loops = false`, giving Ã) or
/// `M = I + a` (`add_self_loops = true`, giving Â). Degrees are row sums of
/// `M`; a node with zero degree gets a unit self-loop.
pub fn normalize_adjacency<T: Scalar>(a: &SparseMatrix<T>, add_self_loops: bool) -> Result<SparseMatrix<T>> {
    check_adjacency(a)?;
    let n = a.n_rows();
    let mut m = if add_self_loops { a.shifted(T::one(), T::one())? } else { a.clone() };
    let isolated: Vec<usize> = (0..n).filter(|&i| m.row(i).1.iter().all(|&v| v == T::zero())).collect();
    if !isolated.is_empty() {
        let loops = SparseMatrix::from_triplets(n, n, isolated.iter().map(|&i| (i, i, T::one())))?;
        m = m.add_scaled(T::one(), &loops, T::one())?;
    }
    let inv_sqrt: Vec<T> = (0..n)
        .map(|i| {
            let deg: T = m.row(i).1.iter().copied().sum();
            deg.sqrt().recip()
        })
        .collect();
    let triplets = m
        .triplets()
        .map(|(i, j, v)| (i, j, inv_sqrt[i] * v * inv_sqrt[j]));
    SparseMatrix::from_triplets(n, n, triplets)
}

/// `L̃ = I − Ã`. Isolated nodes have an all-zero row.
pub fn topo_laplacian<T: Scalar>(a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    normalize_adjacency(a, false)?.shifted(T::one(), -T::one())
}

/// `L̂ = I − Â`, the Laplacian paired with the renormalized adjacency.
pub fn hat_laplacian<T: Scalar>(a: &SparseMatrix<T>) -> Result<SparseMatrix<T>> {
    normalize_adjacency(a, true)?.shifted(T::one(), -T::one())
}

/// Lower estimate of the spectral radius of a symmetric operator by power
/// iteration. For symmetric `op` every iterate satisfies `‖op·x‖ ≤ ρ‖x‖`, so
/// the returned value never overshoots beyond rounding.
pub fn spectral_radius<T: Scalar>(op: &dyn LinearOperator<T>, iterations: usize, seed: u64) -> T {
    let n = op.dim();
    if n == 0 {
        return T::zero();
    }
    let mut x = gaussian_matrix::<T>(n, 1, &mut seeded(seed)).into_values();
    let mut y = vec![T::zero(); n];
    let mut best = T::zero();
    for _ in 0..iterations {
        let norm = dot(&x, &x).sqrt();
        if norm == T::zero() {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply_vec(&x, &mut y);
        best = best.max(dot(&y, &y).sqrt());
        std::mem::swap(&mut x, &mut y);
    }
    best
}

/// Operators shared by every propagation rule for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphOperators<T: Scalar> {
    /// Renormalized adjacency Â.
    pub a_hat: SparseMatrix<T>,
    /// Topological Laplacian L̃ = I − Ã.
    pub l_topo: SparseMatrix<T>,
    /// Semantic Laplacian L̃_X built from feature similarity.
    pub l_sem: SparseMatrix<T>,
}

impl<T: Scalar> GraphOperators<T> {
    pub fn build(adjacency: &SparseMatrix<T>, features: &DenseMatrix<T>, k_sem: usize) -> Result<Self> {
        if features.n_rows() != adjacency.n_rows() {
            return Err(Error::shape(
                "GraphOperators::build",
                format!("{} feature rows", adjacency.n_rows()),
                features.n_rows(),
            ));
        }
        Ok(Self {
            a_hat: normalize_adjacency(adjacency, true)?,
            l_topo: topo_laplacian(adjacency)?,
            l_sem: semantic_laplacian(features, k_sem)?,
        })
    }

    /// Builds Â and L̃ only; `l_sem` is left as the zero matrix.
    pub fn topology_only(adjacency: &SparseMatrix<T>) -> Result<Self> {
        let n = adjacency.n_rows();
        Ok(Self {
            a_hat: normalize_adjacency(adjacency, true)?,
            l_topo: topo_laplacian(adjacency)?,
            l_sem: SparseMatrix::zeros(n, n),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.a_hat.n_rows()
    }

    /// `L̂ = I − Â`.
    pub fn l_hat(&self) -> Result<SparseMatrix<T>> {
        self.a_hat.shifted(T::one(), -T::one())
    }
}
