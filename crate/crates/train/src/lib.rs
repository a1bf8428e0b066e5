//! Desk-scale training laboratory: a tiny fully-connected network with
//! manual backpropagation, from-scratch optimizers, and a swap-noise
//! dataset generator. Runs are deterministic per seed so learning curves
//! can be reproduced bit for bit.

pub mod datagen;
pub mod nn;

pub use datagen::{
    gen_gaussian_pair, inject_swap_noise, split_balanced, DataError, Dataset, DatasetMeta,
};
pub use nn::{
    bce, grad, grad_and_loss, mean_loss, train, AdadeltaHyper, AdadeltaState, AdamHyper,
    AdamState, BatchMode, DivergenceHalt, Gradients, MlpModel, NnError, OptimizerConfig,
    OptimizerKind, OptimizerState, SgdState, TrainConfig, TrainOutcome,
};
