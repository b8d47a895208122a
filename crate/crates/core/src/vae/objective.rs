//! Mini-batch objectives for the VAE branch and their analytic gradients.
//!
//! All variants share the same forward pass (encode, reparameterize, decode)
//! and differ in the latent regularizer and the reconstruction scale:
//!
//! | variant            | latent term                         | recon scale |
//! |--------------------|-------------------------------------|-------------|
//! | weighted semantic  | `−p̃ᵢ (log p(cᵢ|zᵢ) + log C)`         | `λ̃`         |
//! | unweighted         | `−(log p(cᵢ|zᵢ) + log C)`            | 0           |
//! | semantic VAE       | `−log p(cᵢ|zᵢ)`                      | 1           |
//! | plain VAE          | `KL[q(z|xᵢ) ‖ N(0, I)]`              | 1           |
//!
//! The reconstruction term is `−scale · log p(xᵢ|zᵢ)`. Weights `p̃` are treated
//! as constants when differentiating.

use alloc::vec;
use alloc::vec::Vec;

use super::config::{Weighting, WsciConfig};
use super::density::{
    kl_standard_normal, normalize_batch_weights, reparameterize, unit_gaussian_log_density,
    validate_label, BatchWeights, LatentSample,
};
use super::model::{EncoderTrace, VaeNet};
use crate::data::TrainingExample;
use crate::encoding::SemanticMatrix;
use crate::error::{check_len, Error, Result};
use crate::math;
use crate::nn::MlpTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatentTerm {
    Semantic {
        weighting: Weighting,
        /// Adds `log C` inside the weighted bracket.
        offset_log_classes: bool,
    },
    KlStandardNormal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaeObjective {
    pub latent: LatentTerm,
    pub recon_scale: f64,
}

impl VaeObjective {
    pub fn from_config(config: &WsciConfig) -> Self {
        VaeObjective {
            latent: LatentTerm::Semantic {
                weighting: config.weighting,
                offset_log_classes: true,
            },
            recon_scale: config.lambda,
        }
    }

    /// `−log p(y = c | z) − log p(x | z)`.
    pub fn semantic_vae() -> Self {
        VaeObjective {
            latent: LatentTerm::Semantic {
                weighting: Weighting::Uniform,
                offset_log_classes: false,
            },
            recon_scale: 1.0,
        }
    }

    /// Evidence lower bound of a plain VAE with a standard-normal prior.
    pub fn plain_vae() -> Self {
        VaeObjective {
            latent: LatentTerm::KlStandardNormal,
            recon_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub loss: f64,
    pub latent_loss: f64,
    /// `Σ −log p(xᵢ|zᵢ)`, before scaling.
    pub recon_loss: f64,
    /// Normalized reconstruction densities of the batch.
    pub weights: BatchWeights,
}

struct InstanceForward {
    encoder: EncoderTrace,
    sample: LatentSample,
    decoder: MlpTrace,
}

fn forward_batch(net: &VaeNet, batch: &[&TrainingExample], eps: &[Vec<f64>]) -> Result<Vec<InstanceForward>> {
    if batch.is_empty() {
        return Err(Error::Domain("empty mini-batch".into()));
    }
    check_len("batch eps draws", batch.len(), eps.len())?;
    batch
        .iter()
        .zip(eps)
        .map(|(ex, e)| {
            let encoder = net.encoder.trace(&ex.x)?;
            let sample = reparameterize(&encoder.posterior(), e)?;
            let decoder = net.decoder.trace(&sample.z)?;
            Ok(InstanceForward {
                encoder,
                sample,
                decoder,
            })
        })
        .collect()
}

fn applied_weights(
    latent: LatentTerm,
    normalized: &BatchWeights,
    frozen: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if let Some(w) = frozen {
        check_len("frozen weights", normalized.tilde_p.len(), w.len())?;
        return Ok(w.to_vec());
    }
    Ok(match latent {
        LatentTerm::Semantic {
            weighting: Weighting::Reconstruction,
            ..
        } => normalized.tilde_p.clone(),
        _ => vec![1.0; normalized.tilde_p.len()],
    })
}

fn require_semantic(semantic: Option<&SemanticMatrix>) -> Result<&SemanticMatrix> {
    semantic.ok_or_else(|| Error::State("semantic latent term needs a semantic matrix".into()))
}

/// Loss of one mini-batch. `frozen_weights`, when given, replaces the weights
/// the objective would compute (used to hold `p̃` fixed).
pub fn batch_loss(
    net: &VaeNet,
    batch: &[&TrainingExample],
    eps: &[Vec<f64>],
    semantic: Option<&SemanticMatrix>,
    objective: &VaeObjective,
    frozen_weights: Option<&[f64]>,
) -> Result<BatchOutcome> {
    let forward = forward_batch(net, batch, eps)?;
    evaluate(&forward, batch, semantic, objective, frozen_weights).map(|(outcome, _)| outcome)
}

/// Per-instance pieces needed by the backward pass.
struct LatentGrad {
    /// `∂loss/∂logits` for semantic terms.
    logits: Option<Vec<f64>>,
}

fn evaluate(
    forward: &[InstanceForward],
    batch: &[&TrainingExample],
    semantic: Option<&SemanticMatrix>,
    objective: &VaeObjective,
    frozen_weights: Option<&[f64]>,
) -> Result<(BatchOutcome, Vec<LatentGrad>)> {
    let log_p: Vec<f64> = forward
        .iter()
        .zip(batch)
        .map(|(f, ex)| {
            check_len("example features", f.decoder.output().len(), ex.x.len())?;
            Ok(unit_gaussian_log_density(&ex.x, f.decoder.output()))
        })
        .collect::<Result<_>>()?;
    let normalized = normalize_batch_weights(&log_p)?;
    let weights = applied_weights(objective.latent, &normalized, frozen_weights)?;

    let mut latent_loss = 0.0;
    let mut grads = Vec::with_capacity(forward.len());
    for ((f, ex), w) in forward.iter().zip(batch).zip(&weights) {
        match objective.latent {
            LatentTerm::Semantic {
                offset_log_classes, ..
            } => {
                let semantic = require_semantic(semantic)?;
                validate_label(ex.label, semantic.classes())?;
                let logits = semantic.logits(&f.sample.z)?;
                let log_probs = math::log_softmax(&logits);
                let offset = if offset_log_classes {
                    math::ln(semantic.classes() as f64)
                } else {
                    0.0
                };
                latent_loss += -w * (log_probs[ex.label] + offset);
                let mut g: Vec<f64> = log_probs.iter().map(|lp| w * math::exp(*lp)).collect();
                g[ex.label] -= w;
                grads.push(LatentGrad { logits: Some(g) });
            }
            LatentTerm::KlStandardNormal => {
                latent_loss += kl_standard_normal(&f.encoder.posterior())?;
                grads.push(LatentGrad { logits: None });
            }
        }
    }
    let recon_loss: f64 = -log_p.iter().sum::<f64>();
    let loss = latent_loss + objective.recon_scale * recon_loss;
    if !loss.is_finite() {
        return Err(Error::Numerical(alloc::format!("non-finite batch loss {loss}")));
    }
    Ok((
        BatchOutcome {
            loss,
            latent_loss,
            recon_loss,
            weights: normalized,
        },
        grads,
    ))
}

/// Forward and backward pass over one mini-batch, accumulating gradients of
/// [`batch_loss`] (with the objective's own weights held constant) into `net`.
pub fn accumulate_gradients(
    net: &mut VaeNet,
    batch: &[&TrainingExample],
    eps: &[Vec<f64>],
    semantic: Option<&SemanticMatrix>,
    objective: &VaeObjective,
) -> Result<BatchOutcome> {
    let forward = forward_batch(net, batch, eps)?;
    let (outcome, latent_grads) = evaluate(&forward, batch, semantic, objective, None)?;

    for ((f, ex), lg) in forward.iter().zip(batch).zip(&latent_grads) {
        let latent = f.sample.z.len();
        let mut grad_z = vec![0.0; latent];
        let mut grad_mean = vec![0.0; latent];
        let mut grad_log_var = vec![0.0; latent];
        let posterior = f.encoder.posterior();

        if let Some(g) = &lg.logits {
            let pulled = require_semantic(semantic)?.pull_back(g)?;
            for (gz, p) in grad_z.iter_mut().zip(pulled) {
                *gz += p;
            }
        } else {
            for j in 0..latent {
                grad_mean[j] += posterior.mean[j];
                grad_log_var[j] += 0.5 * (math::exp(posterior.log_var[j]) - 1.0);
            }
        }

        if objective.recon_scale != 0.0 {
            let grad_mu_x: Vec<f64> = f
                .decoder
                .output()
                .iter()
                .zip(&ex.x)
                .map(|(mu, x)| objective.recon_scale * (mu - x))
                .collect();
            let from_decoder = net.decoder.backward(&f.decoder, &grad_mu_x)?;
            for (gz, d) in grad_z.iter_mut().zip(from_decoder) {
                *gz += d;
            }
        }

        for j in 0..latent {
            let sigma = math::exp(0.5 * posterior.log_var[j]);
            grad_mean[j] += grad_z[j];
            grad_log_var[j] += grad_z[j] * f.sample.eps[j] * 0.5 * sigma;
        }
        net.encoder.backward(&f.encoder, &grad_mean, &grad_log_var)?;
    }
    Ok(outcome)
}
