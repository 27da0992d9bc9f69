use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::propagation::RegularizerSpec;
use crate::scalar::Scalar;

use super::model::ModelParams;
use super::train::TrainConfig;

pub const CHECKPOINT_VERSION: u32 = 1;

/// A weight matrix in row-major order with `f64` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl StoredMatrix {
    pub fn from_matrix<T: Scalar>(m: &DenseMatrix<T>) -> Self {
        Self {
            rows: m.n_rows(),
            cols: m.n_cols(),
            values: m.values().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn to_matrix<T: Scalar>(&self) -> Result<DenseMatrix<T>> {
        DenseMatrix::new(self.rows, self.cols, self.values.iter().map(|&v| T::of(v)).collect())
    }
}

/// Everything needed to rebuild a trained model: weights, the regularizer, the
/// training configuration and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: RegularizerSpec,
    pub config: TrainConfig,
    pub seed: u64,
    pub best_epoch: usize,
    pub thetas: Vec<StoredMatrix>,
}

impl Checkpoint {
    pub fn new<T: Scalar>(params: &ModelParams<T>, spec: &RegularizerSpec, config: &TrainConfig, best_epoch: usize) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            spec: spec.clone(),
            config: config.clone(),
            seed: config.seed,
            best_epoch,
            thetas: params.thetas.iter().map(StoredMatrix::from_matrix).collect(),
        }
    }

    pub fn params<T: Scalar>(&self) -> Result<ModelParams<T>> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let thetas = self.thetas.iter().map(StoredMatrix::to_matrix).collect::<Result<Vec<_>>>()?;
        if thetas.is_empty() || thetas.windows(2).any(|w| w[0].n_cols() != w[1].n_rows()) {
            return Err(Error::InvalidInput("checkpoint layer dimensions do not chain".into()));
        }
        Ok(ModelParams::from_thetas(thetas))
    }
}
