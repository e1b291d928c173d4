//! Single-layer networks: the triplet embedding network and the
//! autoencoder baseline, with their Adam training loops.

mod adam;
mod autoencoder;
mod layer;
mod tnn;

pub use adam::{AdamConfig, AdamState};
pub use autoencoder::{
    reconstruction_loss_and_grad, train_autoencoder, train_autoencoder_with_progress,
    AeTrainConfig, AutoencoderModel,
};
pub use layer::{Activation, DenseLayer, LayerGrads};
pub use tnn::{
    round_seed, train_tnn, train_tnn_with_progress, triplet_batch_loss_and_grad, EmbeddingModel,
    TnnTrainConfig,
};

/// One finished training epoch, handed to progress callbacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub total_epochs: usize,
    pub loss: f64,
}
