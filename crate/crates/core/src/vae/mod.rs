//! Semantic VAE with a latent-layer classifier over a category-level
//! semantic matrix, trained with a reconstruction-weighted softmax loss.
//!
//! The encoder produces `q(z|x) = N(μ_z, diag σ_z²)`, a latent sample is drawn
//! with the reparameterization `z = μ_z + σ_z ∘ ε`, the class posterior is the
//! softmax of `zᵀA` and the decoder models `p(x|z) = N(μ_x, I)`. The per-batch
//! max-normalized reconstruction density `p̃` weights each instance's
//! classification loss, so instances the decoder explains poorly (likely
//! outliers) contribute little.

mod config;
mod density;
mod model;
pub mod objective;
mod predict;
mod train;

pub use config::{default_hidden, Weighting, WsciConfig};
pub use density::{
    kl_standard_normal, normalize_batch_weights, recon_log_density, reparameterize,
    semantic_class_log_probs, semantic_class_probs, semantic_vae_loss, BatchWeights,
    DecoderOutput, GaussianPosterior, LatentSample,
};
pub use model::{Decoder, Encoder, EncoderTrace, VaeNet, WsciModel};
pub use objective::{BatchOutcome, LatentTerm, VaeObjective};
pub use predict::{outlier_scores, reconstruction_log_density_at_mean};
pub use train::{epoch_batches, train, EpochStats, Trainer};
