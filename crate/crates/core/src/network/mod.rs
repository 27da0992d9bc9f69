//! The layered network: weight multiply, propagation, projection; manual
//! backpropagation; Adam training with early stopping.

mod checkpoint;
mod forward;
mod model;
mod projection;
mod train;

pub use checkpoint::{Checkpoint, StoredMatrix, CHECKPOINT_VERSION};
pub use forward::{forward, loss_and_grads, Dropout, ForwardTrace, InputMatrix};
pub use model::{AdamConfig, AdamState, ModelParams};
pub use projection::{project, relu_project, softmax_project};
pub use train::{
    classification_metrics, evaluate, predict_proba, projective_sets, train, train_on, EpochRecord, Metrics, TrainConfig, TrainOutcome,
};
