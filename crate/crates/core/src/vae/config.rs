use crate::error::{Error, Result};
use crate::math;
use crate::nn::AdamConfig;

/// How the classification term of each instance is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Weighting {
    /// Batch-max normalized reconstruction density `p̃`.
    Reconstruction,
    /// Every weight pinned to one.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WsciConfig {
    /// Feature dimension `d`.
    pub input_dim: usize,
    /// Semantic dimension `m` (rows of the semantic matrix, latent size).
    pub semantic_dim: usize,
    pub classes: usize,
    pub hidden: usize,
    /// Reconstruction trade-off `λ̃`.
    pub lambda: f64,
    /// Latent samples averaged at prediction time.
    pub predict_samples: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weighting: Weighting,
    pub adam: AdamConfig,
}

impl WsciConfig {
    /// Recommended `λ̃` sweep range.
    pub const LAMBDA_RANGE: (f64, f64) = (1e-6, 1e-4);

    pub fn new(input_dim: usize, semantic_dim: usize, classes: usize) -> Self {
        WsciConfig {
            input_dim,
            semantic_dim,
            classes,
            hidden: default_hidden(input_dim, semantic_dim),
            lambda: 1e-4,
            predict_samples: 5,
            batch_size: 64,
            epochs: 50,
            seed: 0,
            weighting: Weighting::Reconstruction,
            adam: AdamConfig::default(),
        }
    }

    /// The plain softmax trainer: weights pinned to one and no reconstruction term.
    pub fn unweighted(mut self) -> Self {
        self.weighting = Weighting::Uniform;
        self.lambda = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("input_dim", self.input_dim),
            ("semantic_dim", self.semantic_dim),
            ("classes", self.classes),
            ("hidden", self.hidden),
            ("predict_samples", self.predict_samples),
            ("batch_size", self.batch_size),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be >= 1"));
            }
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::config("lambda", "must be finite and non-negative"));
        }
        if self.weighting == Weighting::Reconstruction && self.lambda == 0.0 {
            return Err(Error::config(
                "lambda",
                "must be > 0 when weighting by reconstruction density",
            ));
        }
        self.adam.validate()
    }
}

/// `round((d + m) / 2)`, at least one.
pub fn default_hidden(input_dim: usize, semantic_dim: usize) -> usize {
    (math::round((input_dim + semantic_dim) as f64 / 2.0) as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = WsciConfig::new(16, 9, 5);
        assert_eq!(c.hidden, 13);
        assert_eq!(c.lambda, 1e-4);
        assert_eq!(c.predict_samples, 5);
        assert_eq!(c.batch_size, 64);
        c.validate().unwrap();
    }

    #[test]
    fn lambda_zero_only_with_uniform_weights() {
        let mut c = WsciConfig::new(4, 3, 2);
        c.lambda = 0.0;
        assert!(c.validate().is_err());
        c.unweighted().validate().unwrap();
    }

    #[test]
    fn zero_dimension_rejected() {
        let c = WsciConfig::new(4, 0, 2);
        assert!(matches!(c.validate(), Err(Error::Config { field: "semantic_dim", .. })));
    }
}
