//! Dense MLPs with per-dimension activations, reverse-mode gradients and Adam.

mod model;
mod network;
mod train;

pub use model::{build_mlp, build_paper_mlp, ActivationScheme, ModelSize};
pub use network::{
    softmax_in_place, DenseLayer, Gradients, Head, LayerActivation, LayerGrad, LayeredNetwork,
    Mode, Tape,
};
pub use train::{
    adam_step, cross_entropy, cross_entropy_grad, mse, mse_grad, train, train_with_rng, Adam,
    AdamConfig, Loss, Targets, TrainConfig, TrainReport,
};
