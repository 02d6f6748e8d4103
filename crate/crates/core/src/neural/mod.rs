//! Dense feed-forward networks, the autoencoder and the classifier head.

mod network;
mod train;

pub use network::{sigmoid, Activation, Dense, Forward, Gradients, LayerSpec, Loss, Network};
pub use train::{
    decoder_specs, encode_latent, train_autoencoder, train_mlp, train_network, AutoencoderModel,
    MlpClassifier, TrainConfig,
};
