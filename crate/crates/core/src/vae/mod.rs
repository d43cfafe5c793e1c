//! Variational autoencoder over n-bit strings with manual backpropagation.
//!
//! Encoder: `n → h_1 → … → h_d`, then parallel affine heads for `μ` and
//! `log σ²` of an `n`-dimensional latent Gaussian. Decoder mirrors it:
//! `n → h_d → … → h_1 → n` with a sigmoid output giving per-bit Bernoulli
//! probabilities. Hidden layers use a leaky ReLU with slope 0.2.

mod adam;
mod arch;
mod checkpoint;
mod network;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{architecture_for, decoder_parameter_count, decoder_weight_count, NetworkArchitecture};
pub use checkpoint::{read_checkpoint, write_checkpoint, QVAE_MAGIC, QVAE_VERSION};
pub use network::{
    bernoulli_nll, decoder_forward, encoder_forward, gradient, kl_divergence, leaky_relu, loss,
    reparameterize, LayerKind, LayerShape, LossEval, Parameters, LEAK, LOGVAR_CLAMP, PROB_CLAMP,
};
pub use train::{train, warmup_weight, LogRecord, TrainingLog, TrainingSchedule};
