//! Datasets and the graph operators built from them.

mod dataset;
mod operators;
mod semantic;

pub use dataset::{load_dataset, make_split, write_dataset, Dataset, Split};
pub use operators::{
    hat_laplacian, normalize_adjacency, spectral_radius, topo_laplacian, GraphOperators, SYMMETRY_TOLERANCE,
};
pub use semantic::{semantic_laplacian, semantic_similarity, DEFAULT_K_SEM};
