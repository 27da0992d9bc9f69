pub mod error;
pub mod graph;
pub mod linalg;
pub mod lowrank;
pub mod network;
pub mod propagation;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LinearOperator, SparseMatrix};
pub use scalar::Scalar;

pub type DenseF64 = DenseMatrix<f64>;
pub type DenseF32 = DenseMatrix<f32>;
pub type SparseF64 = SparseMatrix<f64>;
pub type SparseF32 = SparseMatrix<f32>;
pub type DatasetF64 = graph::Dataset<f64>;
pub type PropagationF64 = propagation::PropagationOperator<f64>;
pub type ModelF64 = network::ModelParams<f64>;
