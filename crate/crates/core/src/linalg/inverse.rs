use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::scalar::Scalar;

/// Pivots at or below this multiple of `max(1, max|m_ij|)` are treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Gauss–Jordan inverse with partial pivoting. O(n³); only meant for small
/// matrices and for the exact-inverse ablation.
pub fn dense_inverse<T: Scalar>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let (n, c) = m.shape();
    if n != c {
        return Err(Error::shape("dense_inverse", "square matrix", format!("{n}x{c}")));
    }
    m.ensure_finite("dense_inverse input")?;
    let threshold = T::of(PIVOT_TOLERANCE) * m.max_abs().max(T::one());

    let mut a = m.clone();
    let mut inv = DenseMatrix::identity(n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut best = a[(col, col)].abs();
        for row in col + 1..n {
            let v = a[(row, col)].abs();
            if v > best {
                best = v;
                pivot_row = row;
            }
        }
        if !(best > threshold) {
            return Err(Error::Singular {
                step: col,
                magnitude: best.as_f64(),
            });
        }
        if pivot_row != col {
            swap_rows(&mut a, col, pivot_row);
            swap_rows(&mut inv, col, pivot_row);
        }

        let p = a[(col, col)].recip();
        a.row_mut(col).iter_mut().for_each(|v| *v *= p);
        inv.row_mut(col).iter_mut().for_each(|v| *v *= p);

        let pivot_a = a.row(col).to_vec();
        let pivot_inv = inv.row(col).to_vec();
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[(row, col)];
            if f == T::zero() {
                continue;
            }
            for (x, &y) in a.row_mut(row).iter_mut().zip(&pivot_a) {
                *x -= f * y;
            }
            for (x, &y) in inv.row_mut(row).iter_mut().zip(&pivot_inv) {
                *x -= f * y;
            }
        }
    }
    inv.ensure_finite("dense_inverse")?;
    Ok(inv)
}

fn swap_rows<T: Scalar>(m: &mut DenseMatrix<T>, i: usize, j: usize) {
    let n = m.n_cols();
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    let (head, tail) = m.values_mut().split_at_mut(hi * n);
    head[lo * n..(lo + 1) * n].swap_with_slice(&mut tail[..n]);
}
