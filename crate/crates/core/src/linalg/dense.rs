use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    values: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    /// Builds a matrix from a row-major buffer, rejecting bad lengths and non-finite entries.
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::shape(
                "DenseMatrix::new",
                format!("{} values", n_rows * n_cols),
                format!("{} values", values.len()),
            ));
        }
        let m = DenseMatrix {
            n_rows,
            n_cols,
            values,
        };
        m.ensure_finite("DenseMatrix::new")?;
        Ok(m)
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            values: vec![T::zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = T::one();
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.values[i * n + i] = d;
        }
        m
    }

    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                values.push(f(i, j));
            }
        }
        DenseMatrix {
            n_rows,
            n_cols,
            values,
        }
    }

    /// Builds a matrix from nested rows. Panics on ragged input; intended for literals.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), n_cols, "ragged rows");
            values.extend_from_slice(r.as_ref());
        }
        DenseMatrix {
            n_rows,
            n_cols,
            values,
        }
    }

    /// Converts an `f64` matrix into this scalar type.
    pub fn from_f64(m: &DenseMatrix<f64>) -> Self {
        DenseMatrix {
            n_rows: m.n_rows,
            n_cols: m.n_cols,
            values: m.values.iter().map(|&v| T::of(v)).collect(),
        }
    }

    pub fn to_f64(&self) -> DenseMatrix<f64> {
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|v| v.as_f64()).collect(),
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        let c = self.n_cols;
        &mut self.values[i * c..(i + 1) * c]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        assert_eq!(col.len(), self.n_rows);
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    /// Copies the listed rows, in order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        DenseMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            values,
        }
    }

    /// Copies the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Self {
        assert!(k <= self.n_cols);
        Self::from_fn(self.n_rows, k, |i, j| self[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out.values[j * self.n_rows + i] = self.values[i * self.n_cols + j];
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }

    /// `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_rows {
            return Err(Error::shape(
                "matmul",
                format!("lhs cols == rhs rows ({})", self.n_cols),
                format!("{}x{} · {}x{}", self.n_rows, self.n_cols, other.n_rows, other.n_cols),
            ));
        }
        let n = other.n_cols;
        let mut out = Self::zeros(self.n_rows, n);
        if n == 0 {
            return Ok(out);
        }
        let blocked = self.n_rows - self.n_rows % 4;
        // Four output rows at a time so each row of `other` is loaded once per block.
        for (block, out_rows) in out.values[..blocked * n].chunks_exact_mut(4 * n).enumerate() {
            let i = 4 * block;
            let (o0, rest) = out_rows.split_at_mut(n);
            let (o1, rest) = rest.split_at_mut(n);
            let (o2, o3) = rest.split_at_mut(n);
            let (r0, r1, r2, r3) = (self.row(i), self.row(i + 1), self.row(i + 2), self.row(i + 3));
            for k in 0..self.n_cols {
                let b = other.row(k);
                let (a0, a1, a2, a3) = (r0[k], r1[k], r2[k], r3[k]);
                for c in 0..n {
                    let bc = b[c];
                    o0[c] += a0 * bc;
                    o1[c] += a1 * bc;
                    o2[c] += a2 * bc;
                    o3[c] += a3 * bc;
                }
            }
        }
        for i in blocked..self.n_rows {
            let a_row = self.row(i);
            let out_row = &mut out.values[i * n..(i + 1) * n];
            for (k, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                axpy_slice(a, other.row(k), out_row);
            }
        }
        out.ensure_finite("matmul")?;
        Ok(out)
    }

    /// `selfᵀ · other` without materializing the transpose.
    pub fn t_matmul(&self, other: &Self) -> Result<Self> {
        if self.n_rows != other.n_rows {
            return Err(Error::shape(
                "t_matmul",
                format!("equal row counts ({})", self.n_rows),
                format!("{}", other.n_rows),
            ));
        }
        let n = other.n_cols;
        let mut out = Self::zeros(self.n_cols, n);
        if n == 0 {
            return Ok(out);
        }
        let blocked = self.n_rows - self.n_rows % 4;
        // Four rows of the inputs at a time so each output row is touched once per block.
        for k in (0..blocked).step_by(4) {
            let (a0, a1, a2, a3) = (self.row(k), self.row(k + 1), self.row(k + 2), self.row(k + 3));
            let (b0, b1, b2, b3) = (other.row(k), other.row(k + 1), other.row(k + 2), other.row(k + 3));
            for (i, out_row) in out.values.chunks_exact_mut(n).enumerate() {
                let (c0, c1, c2, c3) = (a0[i], a1[i], a2[i], a3[i]);
                for c in 0..n {
                    out_row[c] += c0 * b0[c] + c1 * b1[c] + c2 * b2[c] + c3 * b3[c];
                }
            }
        }
        for k in blocked..self.n_rows {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, &a) in a_row.iter().enumerate() {
                if a == T::zero() {
                    continue;
                }
                axpy_slice(a, b_row, &mut out.values[i * n..(i + 1) * n]);
            }
        }
        out.ensure_finite("t_matmul")?;
        Ok(out)
    }

    /// `self · otherᵀ`.
    pub fn matmul_t(&self, other: &Self) -> Result<Self> {
        if self.n_cols != other.n_cols {
            return Err(Error::shape(
                "matmul_t",
                format!("equal column counts ({})", self.n_cols),
                format!("{}", other.n_cols),
            ));
        }
        let mut out = Self::zeros(self.n_rows, other.n_rows);
        for i in 0..self.n_rows {
            let a = self.row(i);
            for j in 0..other.n_rows {
                out.values[i * other.n_rows + j] = dot(a, other.row(j));
            }
        }
        out.ensure_finite("matmul_t")?;
        Ok(out)
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::shape(
                op,
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let mut out = self.clone();
        out.axpy(T::one(), other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let mut out = self.clone();
        out.axpy(-T::one(), other)?;
        Ok(out)
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: T, other: &Self) -> Result<()> {
        self.check_same_shape(other, "axpy")?;
        axpy_slice(alpha, &other.values, &mut self.values);
        self.ensure_finite("axpy")
    }

    pub fn scale(&self, alpha: T) -> Self {
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|&v| v * alpha).collect(),
        }
    }

    pub fn scale_in_place(&mut self, alpha: T) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "hadamard")?;
        Ok(DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a * b)
                .collect(),
        })
    }

    /// `Tr(selfᵀ · other)`, the Frobenius inner product.
    pub fn inner(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other, "inner")?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn frobenius_norm(&self) -> T {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Largest entrywise absolute difference. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self[(i, i)])
            .sum()
    }

    pub fn max_asymmetry(&self) -> T {
        if self.n_rows != self.n_cols {
            return T::infinity();
        }
        let mut worst = T::zero();
        for i in 0..self.n_rows {
            for j in (i + 1)..self.n_cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Index of the largest entry of each row (first one on ties).
    pub fn argmax_rows(&self) -> Vec<usize> {
        (0..self.n_rows)
            .map(|i| {
                let row = self.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &self.values[i * self.n_cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &mut self.values[i * self.n_cols + j]
    }
}

/// Dot product with four fixed accumulators; the summation order depends only on the length.
#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (T::zero(), T::zero(), T::zero(), T::zero());
    for c in 0..chunks {
        let k = 4 * c;
        s0 += a[k] * b[k];
        s1 += a[k + 1] * b[k + 1];
        s2 += a[k + 2] * b[k + 2];
        s3 += a[k + 3] * b[k + 3];
    }
    let mut tail = T::zero();
    for k in (4 * chunks)..a.len() {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha · x`.
#[inline]
pub fn axpy_slice<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_bad_length() {
        assert!(DenseMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::new(0, 3, Vec::<f64>::new()).is_ok());
    }

    #[test]
    fn transposed_products_agree_with_explicit_transpose() {
        let a = DenseMatrix::from_fn(4, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let b = DenseMatrix::from_fn(4, 2, |i, j| (i + 2 * j) as f64 * 0.5);
        let lhs = a.t_matmul(&b).unwrap();
        let rhs = a.transpose().matmul(&b).unwrap();
        assert_eq!(lhs, rhs);
        let c = DenseMatrix::from_fn(5, 3, |i, j| (i as f64).sin() + j as f64);
        assert!(a.matmul_t(&c).unwrap().max_abs_diff(&a.matmul(&c.transpose()).unwrap()) < 1e-14);
    }

    #[test]
    fn matmul_shape_error() {
        let a = DenseMatrix::<f64>::zeros(2, 3);
        assert!(matches!(a.matmul(&a), Err(Error::Shape { .. })));
    }

    #[test]
    fn argmax_takes_first_on_ties() {
        let m = DenseMatrix::from_rows(&[[1.0, 3.0, 3.0], [0.0, 0.0, 0.0]]);
        assert_eq!(m.argmax_rows(), vec![1, 0]);
    }
}
