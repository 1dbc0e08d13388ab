//! Two-layer mean-aggregation graph convolution classifier with exact
//! gradients, Adam and early stopping.
//!
//! Heterogeneous inputs keep one weight set per relation; messages into a
//! node type are summed across relations. A homogeneous input is just the
//! one-type, one-relation case.

mod checkpoint;
mod input;
mod layer;
mod loss;
mod model;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, model_from_json, model_to_json, save_checkpoint, CHECKPOINT_VERSION};
pub use input::{InputSchema, ModelInput, RelationInput, ReverseEdges, Supervision, TypeInput};
pub use layer::{project_features, sage_forward, NeighborIndex, Projection, SageLayer};
pub use loss::{argmax, log_softmax, masked_accuracy, masked_nll, masked_nll_grad};
pub use model::{
    homogeneous_forward, predict, Architecture, Dropout, ForwardPass, Prediction, SageModel, HIDDEN_DIM, NUM_CLASSES,
};
pub use optim::{cosine_lr, Adam, AdamConfig, EarlyStopping};
pub use train::{train, EpochRecord, ModelState, StageRecord, TrainConfig, Trainer};

#[cfg(test)]
mod tests;
