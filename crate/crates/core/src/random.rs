use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// The single RNG used across the crate, so a seed means the same thing everywhere.
pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. standard normal entries, filled row by row.
pub fn gaussian_matrix<T: Scalar>(n_rows: usize, n_cols: usize, rng: &mut Rng) -> DenseMatrix<T> {
    DenseMatrix::from_fn(n_rows, n_cols, |_, _| {
        let x: f64 = StandardNormal.sample(rng);
        T::of(x)
    })
}
