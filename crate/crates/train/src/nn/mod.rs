//! Minimal neural-network stack: MLP with manual backprop, binary
//! cross-entropy, and from-scratch SGD/Adam/Adadelta.

mod mlp;
mod optim;
mod train;

pub use mlp::{bce, grad, grad_and_loss, mean_loss, Gradients, MlpModel, NnError};
pub use optim::{
    AdadeltaHyper, AdadeltaState, AdamHyper, AdamState, OptimizerConfig, OptimizerKind,
    OptimizerState, SgdState,
};
pub use train::{train, BatchMode, DivergenceHalt, TrainConfig, TrainOutcome};
