//! Dense and sparse kernels. All routines are single-threaded with a fixed
//! summation order, so results are bitwise reproducible for a given input.

mod cg;
mod dense;
mod inverse;
mod operator;
mod qr;
mod sparse;
mod symeig;

pub use cg::{solve_spd, symmetry_tolerance, SYMMETRY_TOLERANCE};
pub use dense::{axpy_slice, dot, DenseMatrix};
pub use inverse::{dense_inverse, PIVOT_TOLERANCE};
pub use operator::LinearOperator;
pub use qr::{qr_thin, RANK_TOLERANCE};
pub use sparse::{spmm, SparseMatrix, PRUNE_TOLERANCE};
pub use symeig::symmetric_eigen;
