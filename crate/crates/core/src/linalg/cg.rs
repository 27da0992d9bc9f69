use crate::error::{Error, Result};
use crate::linalg::dense::{axpy_slice, dot, DenseMatrix};
use crate::linalg::operator::{require_square, LinearOperator};
use crate::scalar::Scalar;

/// Absolute tolerance for the symmetry check on the system matrix in `f64`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// [`SYMMETRY_TOLERANCE`], widened to a hundred machine epsilons for `f32`.
pub fn symmetry_tolerance<T: Scalar>() -> f64 {
    SYMMETRY_TOLERANCE.max(100.0 * T::epsilon().as_f64())
}

/// Solve `m · x = b` column by column with unpreconditioned conjugate gradients.
///
/// On success every column satisfies `‖m·x_j − b_j‖ ≤ tol·‖b_j‖` measured on the
/// true residual, so the Frobenius ratio over the block is also within `tol`.
/// `max_iter` bounds the iterations spent on each column.
pub fn solve_spd<T: Scalar>(
    m: &dyn LinearOperator<T>,
    b: &DenseMatrix<T>,
    tol: f64,
    max_iter: usize,
) -> Result<DenseMatrix<T>> {
    require_square(m, b.n_rows(), "solve_spd")?;
    let asym = m.max_asymmetry().as_f64();
    if !(asym <= symmetry_tolerance::<T>()) {
        return Err(Error::NotSymmetric { max_asymmetry: asym });
    }
    b.ensure_finite("solve_spd rhs")?;

    let mut x = DenseMatrix::zeros(b.n_rows(), b.n_cols());
    let mut worst = 0.0f64;
    for j in 0..b.n_cols() {
        let bj = b.column(j);
        let (xj, rel) = cg_column(m, &bj, T::of(tol), max_iter)?;
        worst = worst.max(rel);
        x.set_column(j, &xj);
    }
    log::trace!("solve_spd: {} columns, worst relative residual {worst:.3e}", b.n_cols());
    x.ensure_finite("solve_spd")?;
    Ok(x)
}

fn cg_column<T: Scalar>(m: &dyn LinearOperator<T>, b: &[T], tol: T, max_iter: usize) -> Result<(Vec<T>, f64)> {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if b_norm == T::zero() {
        return Ok((x, 0.0));
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![T::zero(); n];
    let mut rs = dot(&r, &r);
    let mut iter = 0;

    loop {
        if rs.sqrt() <= target {
            // Confirm against the true residual before accepting.
            m.apply_vec(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rs = dot(&r, &r);
            if rs.sqrt() <= target {
                return Ok((x, (rs.sqrt() / b_norm).as_f64()));
            }
            p.copy_from_slice(&r);
        }
        if iter >= max_iter {
            return Err(Error::NoConvergence {
                solver: "conjugate gradient",
                iterations: iter,
                residual: (rs.sqrt() / b_norm).as_f64(),
            });
        }
        iter += 1;
        m.apply_vec(&p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > T::zero()) {
            return Err(Error::NoConvergence {
                solver: "conjugate gradient (operator not positive definite)",
                iterations: iter,
                residual: (rs.sqrt() / b_norm).as_f64(),
            });
        }
        let step = rs / curvature;
        axpy_slice(step, &p, &mut x);
        axpy_slice(-step, &ap, &mut r);
        let rs_new = dot(&r, &r);
        let ratio = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + ratio * p[i];
        }
        rs = rs_new;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::SparseMatrix;

    #[test]
    fn identity_returns_rhs() {
        let b = DenseMatrix::from_rows(&[[1.0, -2.0], [3.0, 0.5], [0.0, 7.0]]);
        let x = solve_spd(&DenseMatrix::<f64>::identity(3), &b, 1e-12, 10).unwrap();
        assert!(x.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn diagonal_system() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let b = DenseMatrix::from_rows(&[[2.0], [8.0]]);
        let x = solve_spd(&m, &b, 1e-12, 10).unwrap();
        assert!(x.max_abs_diff(&DenseMatrix::from_rows(&[[1.0], [2.0]])) < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let x = solve_spd(&DenseMatrix::<f64>::identity(3), &DenseMatrix::zeros(3, 2), 1e-10, 5).unwrap();
        assert_eq!(x, DenseMatrix::zeros(3, 2));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let m = DenseMatrix::from_rows(&[[2.0, 1.0], [0.0, 2.0]]);
        let err = solve_spd(&m, &DenseMatrix::from_rows(&[[1.0], [1.0]]), 1e-8, 10).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let m = DenseMatrix::from_fn(6, 6, |i, j| if i == j { 3.0 + i as f64 } else { 0.3 });
        let b = DenseMatrix::from_fn(6, 1, |i, _| 1.0 + i as f64);
        match solve_spd(&m, &b, 1e-14, 1) {
            Err(Error::NoConvergence { iterations, residual, .. }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 1e-14);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_operator_fails() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        let b = DenseMatrix::from_rows(&[[0.0], [1.0]]);
        assert!(matches!(solve_spd(&m, &b, 1e-10, 10), Err(Error::NoConvergence { .. })));
    }
}
