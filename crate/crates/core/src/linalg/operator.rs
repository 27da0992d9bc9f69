use crate::error::{Error, Result};
use crate::linalg::dense::{dot, DenseMatrix};
use crate::linalg::sparse::SparseMatrix;
use crate::scalar::Scalar;

/// A square linear map that can be applied to blocks and single vectors.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;

    /// `y = A · x` for a single vector of length [`dim`](Self::dim).
    fn apply_vec(&self, x: &[T], y: &mut [T]);

    /// `A · X` for a block of column vectors.
    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>>;

    /// Largest `|a_ij − a_ji|`.
    fn max_asymmetry(&self) -> T;
}

impl<T: Scalar> LinearOperator<T> for SparseMatrix<T> {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply_vec(&self, x: &[T], y: &mut [T]) {
        self.mul_vec_into(x, y)
    }

    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.spmm(x)
    }

    fn max_asymmetry(&self) -> T {
        SparseMatrix::max_asymmetry(self)
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply_vec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }

    fn apply(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        self.matmul(x)
    }

    fn max_asymmetry(&self) -> T {
        DenseMatrix::max_asymmetry(self)
    }
}

pub(crate) fn require_square<T: Scalar>(op: &dyn LinearOperator<T>, rows: usize, what: &'static str) -> Result<()> {
    if op.dim() != rows {
        return Err(Error::shape(what, format!("{} rows", op.dim()), format!("{rows} rows")));
    }
    Ok(())
}
