use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::random::seeded;
use crate::scalar::Scalar;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, one pair per weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar> {
    pub m: Vec<DenseMatrix<T>>,
    pub v: Vec<DenseMatrix<T>>,
    pub step: u64,
}

/// Layer weights `Θ^{(l)}` (shape `d_{l−1} × d_l`) and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: Scalar> {
    pub thetas: Vec<DenseMatrix<T>>,
    pub adam: AdamState<T>,
}

impl<T: Scalar> ModelParams<T> {
    /// Glorot-uniform weights for the dimension chain `dims = [d_0, …, d_L]`.
    pub fn glorot(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidInput(format!("bad layer dimensions {dims:?}")));
        }
        let mut rng = seeded(seed);
        let thetas = dims
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                DenseMatrix::from_fn(w[0], w[1], |_, _| T::of(rng.random_range(-limit..limit)))
            })
            .collect();
        Ok(Self::from_thetas(thetas))
    }

    /// Wraps given weights with a fresh optimizer state.
    pub fn from_thetas(thetas: Vec<DenseMatrix<T>>) -> Self {
        let zeros: Vec<_> = thetas.iter().map(|t| DenseMatrix::zeros(t.n_rows(), t.n_cols())).collect();
        Self {
            adam: AdamState {
                m: zeros.clone(),
                v: zeros,
                step: 0,
            },
            thetas,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.thetas.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.thetas[0].n_rows()];
        d.extend(self.thetas.iter().map(|t| t.n_cols()));
        d
    }

    /// `Σ_l ‖Θ^{(l)}‖_F²`.
    pub fn squared_norm(&self) -> T {
        self.thetas.iter().map(|t| t.inner(t).expect("same shape")).sum()
    }

    /// One Adam step with the given gradients.
    pub fn adam_step(&mut self, grads: &[DenseMatrix<T>], lr: f64, cfg: &AdamConfig) -> Result<()> {
        if grads.len() != self.thetas.len() {
            return Err(Error::shape("adam_step", self.thetas.len(), grads.len()));
        }
        self.adam.step += 1;
        let t = self.adam.step as i32;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        let (lr, eps) = (T::of(lr), T::of(cfg.eps));
        for (l, g) in grads.iter().enumerate() {
            if g.shape() != self.thetas[l].shape() {
                return Err(Error::shape("adam_step", format!("{:?}", self.thetas[l].shape()), format!("{:?}", g.shape())));
            }
            let m = self.adam.m[l].values_mut();
            let v = self.adam.v[l].values_mut();
            let theta = self.thetas[l].values_mut();
            for (k, &gk) in g.values().iter().enumerate() {
                m[k] = b1 * m[k] + (T::one() - b1) * gk;
                v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                theta[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            self.thetas[l].ensure_finite("adam_step")?;
        }
        Ok(())
    }
}
