use crate::error::{Error, Result};
use crate::linalg::dense::{axpy_slice, dot, DenseMatrix};
use crate::scalar::Scalar;

/// Columns whose norm after orthogonalization falls below this (relative to
/// `max(1, ‖z_j‖)`) are reported as rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Thin QR factorization `z = q · r` by modified Gram–Schmidt with one
/// reorthogonalization pass.
///
/// `q` has orthonormal columns and `r` is upper triangular with a nonnegative
/// diagonal. Fails with [`Error::DegenerateBasis`] naming the first dependent
/// column; the caller decides how to restart.
pub fn qr_thin<T: Scalar>(z: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
    let (n, k) = z.shape();
    if n < k {
        return Err(Error::shape("qr_thin", format!("rows >= cols ({k})"), format!("{n}x{k}")));
    }
    let mut cols: Vec<Vec<T>> = (0..k).map(|j| z.column(j)).collect();
    let mut r = DenseMatrix::zeros(k, k);
    let tol = T::of(RANK_TOLERANCE);

    for j in 0..k {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        let original = dot(v, v).sqrt();
        for _pass in 0..2 {
            for (i, qi) in done.iter().enumerate() {
                let c = dot(qi, v);
                r[(i, j)] += c;
                axpy_slice(-c, qi, v);
            }
        }
        let norm = dot(v, v).sqrt();
        if !(norm > tol * original.max(T::one())) {
            return Err(Error::DegenerateBasis {
                column: j,
                norm: norm.as_f64(),
            });
        }
        r[(j, j)] = norm;
        let inv = norm.recip();
        v.iter_mut().for_each(|x| *x *= inv);
    }

    let mut q = DenseMatrix::zeros(n, k);
    for (j, c) in cols.iter().enumerate() {
        q.set_column(j, c);
    }
    q.ensure_finite("qr_thin")?;
    Ok((q, r))
}
