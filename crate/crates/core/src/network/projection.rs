use crate::linalg::DenseMatrix;
use crate::propagation::ProjectiveSet;
use crate::scalar::Scalar;

/// Projection onto `S₊`: elementwise `max(0, x)`.
pub fn relu_project<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.max(T::zero()))
}

/// Entropic projection onto the simplex: row-wise softmax with the row
/// maximum subtracted first.
pub fn softmax_project<T: Scalar>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = x.clone();
    for i in 0..out.n_rows() {
        softmax_row(out.row_mut(i));
    }
    out
}

pub(crate) fn softmax_row<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

/// `log softmax` of one row.
pub(crate) fn log_softmax_row<T: Scalar>(row: &[T]) -> Vec<T> {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
    row.iter().map(|&v| v - lse).collect()
}

pub fn project<T: Scalar>(set: ProjectiveSet, x: &DenseMatrix<T>) -> DenseMatrix<T> {
    match set {
        ProjectiveSet::Identity => x.clone(),
        ProjectiveSet::NonNegative => relu_project(x),
        ProjectiveSet::Simplex => softmax_project(x),
    }
}
