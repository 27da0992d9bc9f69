use crate::error::{Error, Result};
use crate::linalg::dense::{axpy_slice, DenseMatrix};
use crate::scalar::Scalar;

/// Stored entries with magnitude below this are dropped when a matrix is built.
pub const PRUNE_TOLERANCE: f64 = 1e-15;

/// Canonical CSR matrix: sorted, duplicate-free column indices and no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Assembles a matrix from `(row, col, value)` triplets. Duplicates are summed,
    /// then entries with `|v| < 1e-15` are pruned.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidInput(format!(
                    "triplet ({i}, {j}) outside {n_rows}x{n_cols}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("triplet ({i}, {j})"),
                });
            }
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));

        let prune = T::of(PRUNE_TOLERANCE);
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        let mut k = 0;
        while k < entries.len() {
            let (i, j, mut v) = entries[k];
            k += 1;
            while k < entries.len() && entries[k].0 == i && entries[k].1 == j {
                v += entries[k].2;
                k += 1;
            }
            if v.abs() >= prune {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Wraps raw CSR arrays after validating the canonical-form invariants.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<T>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("CSR: {msg}")));
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return bad(format!("row_ptr must have length {} and start at 0", n_rows + 1));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return bad("row_ptr must be nondecreasing".into());
        }
        if *row_ptr.last().unwrap() != values.len() || col_idx.len() != values.len() {
            return bad("row_ptr end, col_idx and values lengths disagree".into());
        }
        let prune = T::of(PRUNE_TOLERANCE);
        for i in 0..n_rows {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i} columns not strictly increasing"));
            }
            if cols.iter().any(|&c| c >= n_cols) {
                return bad(format!("row {i} has a column index out of range"));
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "SparseMatrix::from_csr".into(),
            });
        }
        if values.iter().any(|v| v.abs() < prune) {
            return bad("explicit zeros are not allowed".into());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![T::one(); n],
        }
    }

    /// Sparsifies a dense matrix, keeping entries with `|v| >= 1e-15`.
    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        let prune = T::of(PRUNE_TOLERANCE);
        let mut row_ptr = Vec::with_capacity(m.n_rows() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..m.n_rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v.abs() >= prune {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(values.len());
        }
        SparseMatrix {
            n_rows: m.n_rows(),
            n_cols: m.n_cols(),
            row_ptr,
            col_idx,
            values,
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
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut out = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            out[(i, j)] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![T::zero(); self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let dst = next[j];
                col_idx[dst] = i;
                values[dst] = v;
                next[j] += 1;
            }
        }
        SparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn scale(&self, alpha: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= alpha;
        }
        out.prune()
    }

    fn prune(self) -> Self {
        let prune = T::of(PRUNE_TOLERANCE);
        if self.values.iter().all(|v| v.abs() >= prune) {
            return self;
        }
        let (n_rows, n_cols) = (self.n_rows, self.n_cols);
        let kept: Vec<_> = self.triplets().filter(|t| t.2.abs() >= prune).collect();
        Self::from_triplets(n_rows, n_cols, kept).expect("pruning keeps a valid matrix")
    }

    /// `alpha · self + beta · other`, merged row by row.
    pub fn add_scaled(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        if self.n_rows != other.n_rows || self.n_cols != other.n_cols {
            return Err(Error::shape(
                "add_scaled",
                format!("{}x{}", self.n_rows, self.n_cols),
                format!("{}x{}", other.n_rows, other.n_cols),
            ));
        }
        let prune = T::of(PRUNE_TOLERANCE);
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let (j, v) = if q >= cb.len() || (p < ca.len() && ca[p] < cb[q]) {
                    p += 1;
                    (ca[p - 1], alpha * va[p - 1])
                } else if p >= ca.len() || cb[q] < ca[p] {
                    q += 1;
                    (cb[q - 1], beta * vb[q - 1])
                } else {
                    p += 1;
                    q += 1;
                    (ca[p - 1], alpha * va[p - 1] + beta * vb[q - 1])
                };
                if v.abs() >= prune {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(values.len());
        }
        let out = SparseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ptr,
            col_idx,
            values,
        };
        if out.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "add_scaled".into(),
            });
        }
        Ok(out)
    }

    /// `alpha · I + beta · self` for square matrices.
    pub fn shifted(&self, alpha: T, beta: T) -> Result<Self> {
        if self.n_rows != self.n_cols {
            return Err(Error::shape("shifted", "square", format!("{}x{}", self.n_rows, self.n_cols)));
        }
        Self::identity(self.n_rows).add_scaled(alpha, self, beta)
    }

    /// Largest `|a_ij − a_ji|`; infinite for non-square matrices.
    pub fn max_asymmetry(&self) -> T {
        if self.n_rows != self.n_cols {
            return T::infinity();
        }
        let mut worst = T::zero();
        for (i, j, v) in self.triplets() {
            worst = worst.max((v - self.get(j, i)).abs());
        }
        worst
    }

    /// `y = self · x` for a single vector.
    #[inline]
    pub fn mul_vec_into(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n_rows) {
            let (cols, vals) = self.row(i);
            let mut acc = T::zero();
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// Sparse · dense product, accumulating each output row in ascending column order.
    pub fn spmm(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.n_cols != b.n_rows() {
            return Err(Error::shape(
                "spmm",
                format!("rhs with {} rows", self.n_cols),
                format!("{}x{}", b.n_rows(), b.n_cols()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.n_rows, b.n_cols());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let out_row = out.row_mut(i);
            for (&k, &v) in cols.iter().zip(vals) {
                axpy_slice(v, b.row(k), out_row);
            }
        }
        out.ensure_finite("spmm")?;
        Ok(out)
    }

    /// `selfᵀ · b` without forming the transpose.
    pub fn t_spmm(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.n_rows != b.n_rows() {
            return Err(Error::shape(
                "t_spmm",
                format!("rhs with {} rows", self.n_rows),
                format!("{}x{}", b.n_rows(), b.n_cols()),
            ));
        }
        let mut out = DenseMatrix::zeros(self.n_cols, b.n_cols());
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let b_row = b.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                axpy_slice(v, b_row, out.row_mut(j));
            }
        }
        out.ensure_finite("t_spmm")?;
        Ok(out)
    }
}

/// Free-function form of [`SparseMatrix::spmm`].
pub fn spmm<T: Scalar>(a: &SparseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.spmm(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_canonicalized() {
        let m = SparseMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 1, 0.5), (1, 1, 1e-17)],
        )
        .unwrap();
        assert_eq!(m.row_ptr(), &[0, 1, 3]);
        assert_eq!(m.col_idx(), &[1, 0, 2]);
        assert_eq!(m.values(), &[2.5, 3.0, 1.0]);
    }

    #[test]
    fn cancelling_duplicates_are_pruned() {
        let m = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, -1.0)]).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn from_csr_validates() {
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0]).is_ok());
        assert!(SparseMatrix::from_csr(2, 2, vec![0, 2, 1], vec![0, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(SparseMatrix::from_csr(1, 2, vec![0, 1], vec![0], vec![0.0]).is_err());
    }

    #[test]
    fn identity_times_b_is_b() {
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 + 0.25);
        assert_eq!(SparseMatrix::identity(3).spmm(&b).unwrap(), b);
    }

    #[test]
    fn zero_times_b_is_zero() {
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64);
        let z = SparseMatrix::<f64>::zeros(4, 3).spmm(&b).unwrap();
        assert_eq!(z, DenseMatrix::zeros(4, 2));
    }

    #[test]
    fn spmm_dimension_mismatch() {
        let b = DenseMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            SparseMatrix::<f64>::identity(3).spmm(&b),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn transpose_and_t_spmm_agree() {
        let a = SparseMatrix::from_triplets(3, 2, vec![(0, 1, 2.0), (2, 0, -1.0), (1, 1, 4.0)]).unwrap();
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i + j) as f64 + 1.0);
        assert_eq!(a.t_spmm(&b).unwrap(), a.transpose().spmm(&b).unwrap());
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn add_scaled_merges_patterns() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0)]).unwrap();
        let b = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 3.0)]).unwrap();
        let c = a.add_scaled(1.0, &b, -1.0).unwrap();
        assert_eq!(c.to_dense(), DenseMatrix::from_rows(&[[0.0, -3.0], [2.0, 0.0]]));
        assert_eq!(c.nnz(), 2);
    }
}
