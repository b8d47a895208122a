use alloc::vec::Vec;

use super::category::{encode_categories, encoding_matrix, CategoryEncoding};
use super::gmm::{gmm_fit, GmmFit, GmmFitOptions, GmmModel};
use super::transform::{learn_transform, PowerIterationOptions, SeparationProblem, TransformMatrix};
use crate::error::Result;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VisualEncodingConfig {
    /// GMM components `K`.
    pub components: usize,
    /// Transform rows `K̃`.
    pub target_rows: usize,
    pub beta: f64,
    pub gmm_max_iters: usize,
    pub gmm_tol: f64,
    pub seed: u64,
}

impl VisualEncodingConfig {
    /// `K = 256`, `K̃ = 128`, `β = 100`.
    pub fn full_scale(seed: u64) -> Self {
        VisualEncodingConfig {
            components: 256,
            target_rows: 128,
            beta: SeparationProblem::DEFAULT_BETA,
            gmm_max_iters: 200,
            gmm_tol: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VisualEncoding {
    pub gmm: GmmFit,
    pub encodings: Vec<CategoryEncoding>,
    pub transform: TransformMatrix,
    /// `W R`: `K̃ × C`.
    pub block: Matrix,
}

/// GMM codebook → suppressed category encodings → learned transform.
pub fn build_visual_encoding(groups: &[Vec<Vec<f64>>], config: &VisualEncodingConfig) -> Result<VisualEncoding> {
    let samples: Vec<Vec<f64>> = groups.iter().flatten().cloned().collect();
    let mut options = GmmFitOptions::new(config.components, config.seed);
    options.max_iters = config.gmm_max_iters;
    options.tol = config.gmm_tol;
    let gmm = gmm_fit(&samples, &options)?;
    let (encodings, transform, block) = encode_with_codebook(groups, &gmm.model, config)?;
    Ok(VisualEncoding {
        gmm,
        encodings,
        transform,
        block,
    })
}

/// Encodings, transform and `W R` block for an already fitted codebook.
/// `config.components` is ignored in favor of the codebook's own size.
pub fn encode_with_codebook(
    groups: &[Vec<Vec<f64>>],
    gmm: &GmmModel,
    config: &VisualEncodingConfig,
) -> Result<(Vec<CategoryEncoding>, TransformMatrix, Matrix)> {
    let encodings = encode_categories(groups, gmm)?;
    let r = encoding_matrix(&encodings)?;
    let problem = SeparationProblem::new(r.clone(), config.beta, Some(config.target_rows))?;
    let transform = learn_transform(
        &problem,
        &PowerIterationOptions {
            seed: config.seed,
            ..PowerIterationOptions::default()
        },
    )?;
    let block = transform.apply(&r)?;
    Ok((encodings, transform, block))
}
