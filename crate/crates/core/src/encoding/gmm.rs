use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::math;
use crate::rng::{self, stream};

/// Diagonal-covariance Gaussian mixture.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, variances: Vec<Vec<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(Error::Domain("mixture needs at least one component".into()));
        }
        check_len("gmm means", k, means.len())?;
        check_len("gmm variances", k, variances.len())?;
        let dim = means[0].len();
        for (m, v) in means.iter().zip(&variances) {
            check_len("gmm mean", dim, m.len())?;
            check_len("gmm variance", dim, v.len())?;
            if v.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
                return Err(Error::Domain("mixture variances must be positive".into()));
            }
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("mixture weights must lie on the simplex (sum {total})")));
        }
        Ok(GmmModel {
            weights,
            means,
            variances,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// `log π_k + log N(x; μ_k, diag σ_k²)` for every component.
    pub fn log_joint(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("gmm input", self.dim(), x.len())?;
        Ok(self
            .weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, mean), var)| {
                let mut lp = math::ln(*w);
                for ((xi, mi), vi) in x.iter().zip(mean).zip(var) {
                    let d = xi - mi;
                    lp -= 0.5 * (math::LN_2PI + math::ln(*vi) + d * d / vi);
                }
                lp
            })
            .collect())
    }

    pub fn log_likelihood(&self, x: &[f64]) -> Result<f64> {
        Ok(math::log_sum_exp(&self.log_joint(x)?))
    }

    pub fn mean_log_likelihood(&self, samples: &[Vec<f64>]) -> Result<f64> {
        let mut total = 0.0;
        for s in samples {
            total += self.log_likelihood(s)?;
        }
        Ok(total / samples.len() as f64)
    }
}

/// `γ(j) = π_j N(x; μ_j, σ_j²) / Σ_k π_k N(x; μ_k, σ_k²)`.
pub fn responsibilities(x: &[f64], gmm: &GmmModel) -> Result<Vec<f64>> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("responsibilities need finite input".into()));
    }
    Ok(math::softmax(&gmm.log_joint(x)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmFitOptions {
    pub components: usize,
    pub max_iters: usize,
    /// Stop once the mean log-likelihood improves by less than this.
    pub tol: f64,
    pub seed: u64,
    pub variance_floor: f64,
}

impl GmmFitOptions {
    pub fn new(components: usize, seed: u64) -> Self {
        GmmFitOptions {
            components,
            max_iters: 200,
            tol: 1e-6,
            seed,
            variance_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub model: GmmModel,
    /// Mean log-likelihood of the samples, evaluated before each M-step and
    /// once more for the final model.
    pub log_likelihoods: Vec<f64>,
    /// `(iteration, component)` pairs re-seeded after losing all mass.
    pub reseeds: Vec<(usize, usize)>,
    pub converged: bool,
}

/// Components whose total responsibility falls below this are re-seeded.
const EMPTY_MASS: f64 = 1e-10;

/// EM for a diagonal GMM with k-means++ seeding of the means, global
/// variances and uniform priors.
pub fn gmm_fit(samples: &[Vec<f64>], options: &GmmFitOptions) -> Result<GmmFit> {
    let k = options.components;
    if k == 0 {
        return Err(Error::Domain("need at least one component".into()));
    }
    if samples.len() < k {
        return Err(Error::Domain(format!(
            "{} samples cannot support {k} components",
            samples.len()
        )));
    }
    let dim = samples[0].len();
    for s in samples {
        check_len("gmm sample", dim, s.len())?;
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("gmm samples must be finite".into()));
        }
    }
    let n = samples.len();
    let floor = options.variance_floor;
    let mut rng = rng::seeded(options.seed, stream::GMM);

    let global_mean: Vec<f64> = (0..dim)
        .map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n as f64)
        .collect();
    let global_var: Vec<f64> = (0..dim)
        .map(|j| {
            (samples
                .iter()
                .map(|s| (s[j] - global_mean[j]) * (s[j] - global_mean[j]))
                .sum::<f64>()
                / n as f64)
                .max(floor)
        })
        .collect();

    let mut model = GmmModel {
        weights: vec![1.0 / k as f64; k],
        means: kmeans_plus_plus(samples, k, &mut rng),
        variances: vec![global_var.clone(); k],
    };

    let mut log_likelihoods = Vec::new();
    let mut reseeds = Vec::new();
    let mut converged = false;
    let mut resp = vec![vec![0.0; k]; n];

    for iter in 0..options.max_iters {
        // E-step.
        let mut ll = 0.0;
        for (s, r) in samples.iter().zip(resp.iter_mut()) {
            let joint = model.log_joint(s)?;
            let lse = math::log_sum_exp(&joint);
            ll += lse;
            for (ri, j) in r.iter_mut().zip(&joint) {
                *ri = math::exp(j - lse);
            }
        }
        let ll = ll / n as f64;
        if !ll.is_finite() {
            return Err(Error::Numerical(format!("EM log-likelihood became {ll}")));
        }
        if let Some(prev) = log_likelihoods.last() {
            if ll - prev < options.tol {
                log_likelihoods.push(ll);
                converged = true;
                break;
            }
        }
        log_likelihoods.push(ll);

        // M-step, accumulated in sample order.
        for c in 0..k {
            let mass: f64 = resp.iter().map(|r| r[c]).sum();
            if mass < EMPTY_MASS {
                let pick = rng.random_range(0..n);
                log::warn!("gmm component {c} lost its mass at iteration {iter}; re-seeding from sample {pick}");
                reseeds.push((iter, c));
                model.means[c] = samples[pick].clone();
                model.variances[c] = global_var.clone();
                model.weights[c] = 1.0 / n as f64;
                continue;
            }
            let mut mean = vec![0.0; dim];
            for (s, r) in samples.iter().zip(&resp) {
                for (m, v) in mean.iter_mut().zip(s) {
                    *m += r[c] * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= mass);
            let mut var = vec![0.0; dim];
            for (s, r) in samples.iter().zip(&resp) {
                for ((acc, v), m) in var.iter_mut().zip(s).zip(&mean) {
                    *acc += r[c] * (v - m) * (v - m);
                }
            }
            var.iter_mut().for_each(|v| *v = (*v / mass).max(floor));
            model.means[c] = mean;
            model.variances[c] = var;
            model.weights[c] = mass / n as f64;
        }
        let total: f64 = model.weights.iter().sum();
        model.weights.iter_mut().for_each(|w| *w /= total);
    }
    if !converged {
        log_likelihoods.push(model.mean_log_likelihood(samples)?);
    }
    Ok(GmmFit {
        model,
        log_likelihoods,
        reseeds,
        converged,
    })
}

fn kmeans_plus_plus<R: Rng + ?Sized>(samples: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centers = vec![samples[rng.random_range(0..samples.len())].clone()];
    let mut dist: Vec<f64> = samples
        .iter()
        .map(|s| math::squared_distance(s, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = samples.len() - 1;
            for (i, d) in dist.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..samples.len())
        };
        let center = samples[pick].clone();
        for (d, s) in dist.iter_mut().zip(samples) {
            *d = d.min(math::squared_distance(s, &center));
        }
        centers.push(center);
    }
    centers
}
