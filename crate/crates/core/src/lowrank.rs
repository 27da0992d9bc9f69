//! Truncated eigendecomposition of `αL̃_G + βL̃_X` by subspace iteration and the
//! Woodbury-form application of `(I + αL̃_G + βL̃_X)^{-1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphOperators;
use crate::linalg::{dense_inverse, qr_thin, symmetric_eigen, DenseMatrix, LinearOperator, SparseMatrix};
use crate::random::{gaussian_matrix, seeded, Rng};
use crate::scalar::Scalar;

/// Eigenvalues in `[-PSD_CLAMP, 0)` are treated as zero by [`assemble_factor`].
pub const PSD_CLAMP: f64 = 1e-10;

/// Two Ritz values closer than this trigger an eigen-gap warning.
pub const GAP_COLLAPSE: f64 = 1e-12;

/// Settings for [`subspace_iteration`] and [`top_r_eigs`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EigOptions {
    /// Target for `‖MU − UΛ‖_F / ‖Λ‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra block columns beyond `r`. At least one keeps a gap estimate available.
    pub oversample: usize,
    /// Rayleigh–Ritz refinement and convergence check every this many iterations.
    pub check_every: usize,
    /// Fail instead of warning when [`build_tsgcn_operator`] hits `max_iter`.
    pub strict: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 300,
            seed: 0,
            oversample: 1,
            check_every: 5,
            strict: false,
        }
    }
}

/// Result of subspace iteration: the best Ritz basis seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EigState<T: Scalar> {
    /// `N × r` orthonormal Ritz vectors, ordered by descending Ritz value.
    pub u: DenseMatrix<T>,
    /// Leading `r × r` block of the most recent QR triangle.
    pub r_diag: DenseMatrix<T>,
    /// Ritz values for the columns of `u`, descending.
    pub eigenvalues: Vec<T>,
    /// First discarded Ritz value, when the block was oversampled.
    pub next_eigenvalue: Option<T>,
    /// Iteration at which the accepted state was measured.
    pub iter: usize,
    pub residual: f64,
    /// Accepted residuals in order; nonincreasing by construction.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl<T: Scalar> EigState<T> {
    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn relative_residual<T: Scalar>(mu: &DenseMatrix<T>, u: &DenseMatrix<T>, theta: &[T]) -> f64 {
    let mut num = T::zero();
    for i in 0..u.n_rows() {
        let (a, b) = (mu.row(i), u.row(i));
        for (j, &t) in theta.iter().enumerate() {
            let d = a[j] - b[j] * t;
            num += d * d;
        }
    }
    let den: T = theta.iter().map(|&t| t * t).sum();
    if num == T::zero() {
        0.0
    } else if den == T::zero() {
        f64::INFINITY
    } else {
        (num / den).sqrt().as_f64()
    }
}

/// QR that replaces dependent columns with fresh random directions.
fn orthonormalize<T: Scalar>(mut z: DenseMatrix<T>, rng: &mut Rng) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    for _ in 0..=z.n_cols() {
        match qr_thin(&z) {
            Ok(qr) => return Ok(qr),
            Err(Error::DegenerateBasis { column, .. }) => {
                let fresh = gaussian_matrix::<T>(z.n_rows(), 1, rng).into_values();
                z.set_column(column, &fresh);
            }
            Err(e) => return Err(e),
        }
    }
    qr_thin(&z)
}

/// Subspace iteration `Z = MU`, `U ← QR(Z)` with periodic Rayleigh–Ritz
/// refinement. Always returns the state with the smallest residual seen; the
/// `converged` flag tells whether it met `opts.tol`.
pub fn subspace_iteration<T: Scalar>(m: &dyn LinearOperator<T>, r: usize, opts: &EigOptions) -> Result<EigState<T>> {
    let n = m.dim();
    if r == 0 || r > n {
        return Err(Error::InvalidInput(format!("rank {r} outside 1..={n}")));
    }
    let asym = m.max_asymmetry().as_f64();
    if asym > crate::linalg::symmetry_tolerance::<T>() {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    let block = (r + opts.oversample).min(n);
    let check_every = opts.check_every.max(1);
    let mut rng = seeded(opts.seed);
    let (mut u, mut r_full) = orthonormalize(gaussian_matrix::<T>(n, block, &mut rng), &mut rng)?;

    let mut best: Option<EigState<T>> = None;
    let mut history = Vec::new();
    for t in 1..=opts.max_iter.max(1) {
        let mut z = m.apply(&u)?;
        if t == 1 || t % check_every == 0 || t == opts.max_iter {
            let (theta, y) = symmetric_eigen(&u.t_matmul(&z)?)?;
            u = u.matmul(&y)?;
            z = z.matmul(&y)?;
            let residual = relative_residual(&z.leading_columns(r), &u.leading_columns(r), &theta[..r]);
            let improved = best.as_ref().is_none_or(|b| residual <= b.residual);
            if improved {
                history.push(residual);
                best = Some(EigState {
                    u: u.leading_columns(r),
                    r_diag: DenseMatrix::from_fn(r, r, |i, j| r_full[(i, j)]),
                    eigenvalues: theta[..r].to_vec(),
                    next_eigenvalue: theta.get(r).copied(),
                    iter: t,
                    residual,
                    residual_history: Vec::new(),
                    converged: residual <= opts.tol,
                });
            }
            if residual <= opts.tol {
                break;
            }
        }
        let (q, rr) = orthonormalize(z, &mut rng)?;
        u = q;
        r_full = rr;
    }

    let mut state = best.expect("at least one Rayleigh-Ritz check runs");
    state.residual_history = history;
    if let Some(next) = state.next_eigenvalue {
        let last = state.eigenvalues[r - 1];
        if (last - next).abs().as_f64() < GAP_COLLAPSE {
            log::warn!("eigen-gap collapse at rank {r}: lambda_r = {last}, lambda_r+1 = {next}");
        }
    }
    Ok(state)
}

/// The `r` largest eigenpairs of a symmetric PSD operator. Fails with
/// [`Error::NoConvergence`] if the residual target is not reached.
pub fn top_r_eigs<T: Scalar>(m: &dyn LinearOperator<T>, r: usize, opts: &EigOptions) -> Result<EigState<T>> {
    let state = subspace_iteration(m, r, opts)?;
    if !state.converged {
        return Err(Error::NoConvergence {
            solver: "subspace iteration",
            iterations: opts.max_iter,
            residual: state.residual,
        });
    }
    Ok(state)
}

/// `(I + W Vᵀ)^{-1}` held in factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankOperator<T: Scalar> {
    pub w: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
    /// `(I + VᵀW)^{-1}`, `r × r`.
    pub core_inv: DenseMatrix<T>,
}

impl<T: Scalar> LowRankOperator<T> {
    pub fn from_factors(w: DenseMatrix<T>, v: DenseMatrix<T>) -> Result<Self> {
        if w.shape() != v.shape() {
            return Err(Error::shape("LowRankOperator", format!("{:?}", w.shape()), format!("{:?}", v.shape())));
        }
        let mut core = v.t_matmul(&w)?;
        for i in 0..core.n_rows() {
            core[(i, i)] += T::one();
        }
        let core_inv = dense_inverse(&core)?;
        Ok(Self { w, v, core_inv })
    }

    pub fn rank(&self) -> usize {
        self.w.n_cols()
    }

    pub fn n(&self) -> usize {
        self.w.n_rows()
    }
}

/// `W = V = U·diag(√λ)` from an eigen state, with tiny negative eigenvalues
/// clamped to zero.
pub fn assemble_factor<T: Scalar>(eig: &EigState<T>) -> Result<LowRankOperator<T>> {
    let roots = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(index, &lambda)| {
            if lambda.as_f64() < -PSD_CLAMP {
                Err(Error::PsdViolation {
                    index,
                    value: lambda.as_f64(),
                })
            } else {
                Ok(lambda.max(T::zero()).sqrt())
            }
        })
        .collect::<Result<Vec<T>>>()?;
    let w = DenseMatrix::from_fn(eig.u.n_rows(), roots.len(), |i, j| eig.u[(i, j)] * roots[j]);
    LowRankOperator::from_factors(w.clone(), w)
}

/// `h − W (I + VᵀW)^{-1} Vᵀ h`, never forming an `N × N` matrix.
pub fn woodbury_apply<T: Scalar>(op: &LowRankOperator<T>, h: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if h.n_rows() != op.n() {
        return Err(Error::shape("woodbury_apply", format!("{} rows", op.n()), format!("{} rows", h.n_rows())));
    }
    if op.rank() == 0 {
        return Ok(h.clone());
    }
    let inner = op.core_inv.matmul(&op.v.t_matmul(h)?)?;
    h.sub(&op.w.matmul(&inner)?)
}

/// Convergence facts about the factorization behind a tsGCN operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigSummary {
    pub rank: usize,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub seed: u64,
    pub largest: f64,
    pub smallest_kept: f64,
    pub next: Option<f64>,
}

/// `(I + αL̃_G + βL̃_X)^{-1}`, either through the rank-`r` Woodbury form or as a
/// dense inverse.
#[derive(Debug, Clone, PartialEq)]
pub enum TsgcnOperator<T: Scalar> {
    LowRank {
        op: LowRankOperator<T>,
        summary: EigSummary,
    },
    Exact(DenseMatrix<T>),
}

impl<T: Scalar> TsgcnOperator<T> {
    pub fn summary(&self) -> Option<&EigSummary> {
        match self {
            Self::LowRank { summary, .. } => Some(summary),
            Self::Exact(_) => None,
        }
    }
}

impl<T: Scalar> LinearOperator<T> for TsgcnOperator<T> {
    fn dim(&self) -> usize {
        match self {
            Self::LowRank { op, .. } => op.n(),
            Self::Exact(m) => m.n_rows(),
        }
    }

    fn apply_vec(&self, x: &[T], y: &mut [T]) {
        match self {
            Self::Exact(m) => m.apply_vec(x, y),
            Self::LowRank { op, .. } => {
                let h = DenseMatrix::new(x.len(), 1, x.to_vec()).expect("finite input vector");
                let out = woodbury_apply(op, &h).expect("shape checked by caller");
                y.copy_from_slice(out.values());
            }
        }
    }

    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Self::LowRank { op, .. } => woodbury_apply(op, x),
            Self::Exact(m) => m.matmul(x),
        }
    }

    fn max_asymmetry(&self) -> T {
        match self {
            Self::LowRank { op, .. } => op.w.max_abs_diff(&op.v),
            Self::Exact(m) => m.max_asymmetry(),
        }
    }
}

/// `αL̃_G + βL̃_X` as a sparse matrix.
pub fn joint_laplacian<T: Scalar>(ops: &GraphOperators<T>, alpha: f64, beta: f64) -> Result<SparseMatrix<T>> {
    ops.l_topo.add_scaled(T::of(alpha), &ops.l_sem, T::of(beta))
}

/// Builds the tsGCN propagation operator. With `exact` the dense inverse of
/// `I + αL̃_G + βL̃_X` is formed; otherwise its top-`r` eigenpairs are found
/// and applied through the Woodbury identity. Unless `eig.strict`, running out
/// of iterations is logged and the best basis found is used.
pub fn build_tsgcn_operator<T: Scalar>(
    ops: &GraphOperators<T>,
    alpha: f64,
    beta: f64,
    r: usize,
    exact: bool,
    eig: &EigOptions,
) -> Result<TsgcnOperator<T>> {
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha and beta must be nonnegative, got ({alpha}, {beta})")));
    }
    let m = joint_laplacian(ops, alpha, beta)?;
    if exact {
        let system = m.shifted(T::one(), T::one())?.to_dense();
        return Ok(TsgcnOperator::Exact(dense_inverse(&system)?));
    }
    let state = subspace_iteration(&m, r, eig)?;
    if !state.converged {
        if eig.strict {
            return Err(Error::NoConvergence {
                solver: "subspace iteration",
                iterations: eig.max_iter,
                residual: state.residual,
            });
        }
        log::warn!(
            "subspace iteration for rank {r} stopped at residual {:.3e} (tol {:.1e}); using best basis",
            state.residual,
            eig.tol
        );
    }
    let summary = EigSummary {
        rank: r,
        iterations: state.iter,
        residual: state.residual,
        converged: state.converged,
        seed: eig.seed,
        largest: state.eigenvalues[0].as_f64(),
        smallest_kept: state.eigenvalues[r - 1].as_f64(),
        next: state.next_eigenvalue.map(Scalar::as_f64),
    };
    Ok(TsgcnOperator::LowRank {
        op: assemble_factor(&state)?,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_top_two() {
        let m = DenseMatrix::from_diagonal(&[3.0, 2.0, 1.0]);
        let s = top_r_eigs(&m, 2, &EigOptions { tol: 1e-12, max_iter: 500, ..Default::default() }).unwrap();
        assert!((s.eigenvalues[0] - 3.0f64).abs() < 1e-10 && (s.eigenvalues[1] - 2.0f64).abs() < 1e-10);
        assert!((s.u[(0, 0)].abs() - 1.0f64).abs() < 1e-6);
        assert!((s.u[(1, 1)].abs() - 1.0f64).abs() < 1e-6);
    }

    #[test]
    fn identity_converges_immediately() {
        let s = top_r_eigs(&DenseMatrix::<f64>::identity(5), 2, &EigOptions::default()).unwrap();
        assert_eq!(s.iter, 1);
        assert!(s.residual < 1e-14);
        assert!(s.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_operator_is_handled() {
        let s = top_r_eigs(&SparseMatrix::<f64>::zeros(4, 4), 2, &EigOptions::default()).unwrap();
        assert_eq!(s.residual, 0.0);
        let op = assemble_factor(&s).unwrap();
        let h = DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        assert_eq!(woodbury_apply(&op, &h).unwrap(), h);
    }

    #[test]
    fn history_is_monotone() {
        let m = DenseMatrix::from_fn(12, 12, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let s = subspace_iteration(&m, 3, &EigOptions { tol: 1e-13, check_every: 1, ..Default::default() }).unwrap();
        assert!(s.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn non_convergence_carries_residual() {
        let m = DenseMatrix::from_diagonal(&[1.0, 0.999, 0.998, 0.5]);
        let opts = EigOptions { tol: 1e-14, max_iter: 3, oversample: 0, ..Default::default() };
        match top_r_eigs(&m, 1, &opts) {
            Err(Error::NoConvergence { residual, .. }) => assert!(residual > 1e-14),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn factor_square_roots() {
        let state = EigState {
            u: DenseMatrix::<f64>::identity(3).leading_columns(2),
            r_diag: DenseMatrix::identity(2),
            eigenvalues: vec![4.0, 1.0],
            next_eigenvalue: None,
            iter: 1,
            residual: 0.0,
            residual_history: vec![0.0],
            converged: true,
        };
        let op = assemble_factor(&state).unwrap();
        assert_eq!(op.w.column(0), vec![2.0, 0.0, 0.0]);
        assert_eq!(op.w.column(1), vec![0.0, 1.0, 0.0]);
        assert_eq!(op.w, op.v);

        let mut bad = state.clone();
        bad.eigenvalues[1] = -1e-6;
        assert!(matches!(assemble_factor(&bad), Err(Error::PsdViolation { index: 1, .. })));
        bad.eigenvalues[1] = -1e-11;
        assert_eq!(assemble_factor(&bad).unwrap().w.column(1), vec![0.0; 3]);
    }

    #[test]
    fn scalar_woodbury() {
        let w = DenseMatrix::from_rows(&[[2f64.sqrt()]]);
        let op = LowRankOperator::from_factors(w.clone(), w).unwrap();
        let out = woodbury_apply(&op, &DenseMatrix::from_rows(&[[3.0]])).unwrap();
        assert!((out[(0, 0)] - 1.0f64).abs() < 1e-15);
    }

    #[test]
    fn rank_zero_is_identity() {
        let op = LowRankOperator::from_factors(DenseMatrix::<f64>::zeros(3, 0), DenseMatrix::zeros(3, 0)).unwrap();
        let h = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        assert_eq!(woodbury_apply(&op, &h).unwrap(), h);
        assert!(matches!(woodbury_apply(&op, &DenseMatrix::zeros(2, 1)), Err(Error::Shape { .. })));
    }
}
