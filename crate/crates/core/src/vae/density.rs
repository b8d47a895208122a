use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::encoding::SemanticMatrix;
use crate::error::{check_len, Error, Result};
use crate::math;

/// `q(z|x) = N(μ_z, diag σ_z²)`, stored as `(μ_z, log σ_z²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        check_len("GaussianPosterior", mean.len(), log_var.len())?;
        Ok(GaussianPosterior { mean, log_var })
    }

    /// Builds a posterior from standard deviations, which must be positive.
    pub fn from_std(mean: Vec<f64>, std: &[f64]) -> Result<Self> {
        check_len("GaussianPosterior", mean.len(), std.len())?;
        if let Some(s) = std.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::Domain(format!("standard deviation must be positive, got {s}")));
        }
        let log_var = std.iter().map(|s| 2.0 * math::ln(*s)).collect();
        Ok(GaussianPosterior { mean, log_var })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn std(&self) -> Vec<f64> {
        self.log_var.iter().map(|lv| math::exp(0.5 * lv)).collect()
    }
}

/// A latent draw together with the standard-normal noise that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub z: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Decoder output; `σ_x` is fixed to one in every coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderOutput {
    pub mean: Vec<f64>,
}

impl DecoderOutput {
    pub fn sigma(&self) -> Vec<f64> {
        vec![1.0; self.mean.len()]
    }
}

/// `z = μ_z + σ_z ∘ ε`.
pub fn reparameterize(q: &GaussianPosterior, eps: &[f64]) -> Result<LatentSample> {
    check_len("reparameterize eps", q.dim(), eps.len())?;
    let z = q
        .mean
        .iter()
        .zip(&q.log_var)
        .zip(eps)
        .map(|((mu, lv), e)| mu + math::exp(0.5 * lv) * e)
        .collect();
    Ok(LatentSample {
        z,
        eps: eps.to_vec(),
    })
}

/// `log N(x; μ_x, I) = −(d/2) log 2π − ½‖x − μ_x‖²`.
pub fn recon_log_density(x: &[f64], out: &DecoderOutput) -> Result<f64> {
    check_len("recon_log_density", out.mean.len(), x.len())?;
    Ok(unit_gaussian_log_density(x, &out.mean))
}

pub(crate) fn unit_gaussian_log_density(x: &[f64], mean: &[f64]) -> f64 {
    -0.5 * x.len() as f64 * math::LN_2PI - 0.5 * math::squared_distance(x, mean)
}

/// `KL[q ‖ N(0, I)] = ½ Σ (μ² + σ² − 1 − log σ²)`.
pub fn kl_standard_normal(q: &GaussianPosterior) -> Result<f64> {
    let mut kl = 0.0;
    for (mu, lv) in q.mean.iter().zip(&q.log_var) {
        let var = math::exp(*lv);
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::Domain(format!("posterior variance must be positive, got {var}")));
        }
        kl += mu * mu + var - 1.0 - lv;
    }
    Ok(0.5 * kl)
}

/// `p(y = c | z) = softmax(zᵀA)_c`.
pub fn semantic_class_probs(z: &[f64], semantic: &SemanticMatrix) -> Result<Vec<f64>> {
    Ok(math::softmax(&semantic.logits(z)?))
}

pub fn semantic_class_log_probs(z: &[f64], semantic: &SemanticMatrix) -> Result<Vec<f64>> {
    Ok(math::log_softmax(&semantic.logits(z)?))
}

fn check_label(label: usize, classes: usize) -> Result<()> {
    if label >= classes {
        return Err(Error::Domain(format!("label {label} out of range for {classes} classes")));
    }
    Ok(())
}

/// `−log p(y = c | z) − log p(x | z)`.
pub fn semantic_vae_loss(
    x: &[f64],
    label: usize,
    z: &[f64],
    decoded: &DecoderOutput,
    semantic: &SemanticMatrix,
) -> Result<f64> {
    check_label(label, semantic.classes())?;
    let log_probs = semantic_class_log_probs(z, semantic)?;
    Ok(-log_probs[label] - recon_log_density(x, decoded)?)
}

pub(crate) fn validate_label(label: usize, classes: usize) -> Result<()> {
    check_label(label, classes)
}

/// Per-batch normalized reconstruction densities.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchWeights {
    pub log_p: Vec<f64>,
    /// `exp(log_p − max log_p)`, in `(0, 1]` with at least one entry equal to 1.
    pub tilde_p: Vec<f64>,
}

pub fn normalize_batch_weights(log_p: &[f64]) -> Result<BatchWeights> {
    if log_p.is_empty() {
        return Err(Error::Domain("cannot normalize an empty batch".into()));
    }
    if let Some(v) = log_p.iter().find(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite log density {v}")));
    }
    let top = math::max(log_p);
    Ok(BatchWeights {
        log_p: log_p.to_vec(),
        tilde_p: log_p.iter().map(|v| math::exp(v - top)).collect(),
    })
}
