use alloc::vec::Vec;

use super::density::{normalize_batch_weights, unit_gaussian_log_density};
use super::model::VaeNet;
use crate::error::{Error, Result};

/// `log p(x | z = μ_z(x))`: the reconstruction density at the posterior mean.
pub fn reconstruction_log_density_at_mean(net: &VaeNet, x: &[f64]) -> Result<f64> {
    let q = net.encoder.encode(x)?;
    let out = net.decoder.decode(&q.mean)?;
    Ok(unit_gaussian_log_density(x, &out.mean))
}

/// Per-instance `p̃` with `ε = 0`, max-normalized within consecutive
/// evaluation batches of `batch_size` inputs. Scores lie in `(0, 1]`.
pub fn outlier_scores(net: &VaeNet, inputs: &[&[f64]], batch_size: usize) -> Result<Vec<f64>> {
    if batch_size == 0 {
        return Err(Error::config("eval_batch", "must be >= 1"));
    }
    let log_p = inputs
        .iter()
        .map(|x| reconstruction_log_density_at_mean(net, x))
        .collect::<Result<Vec<_>>>()?;
    let mut scores = Vec::with_capacity(inputs.len());
    for chunk in log_p.chunks(batch_size) {
        scores.extend(normalize_batch_weights(chunk)?.tilde_p);
    }
    Ok(scores)
}
