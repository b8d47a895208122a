//! Category-level semantic representations.
//!
//! A diagonal GMM fitted on region-proposal features acts as a visual
//! codebook. Each category is encoded by its mean responsibility vector with
//! the smallest entries suppressed, then projected by a near-orthonormal
//! transform learned row by row to spread the categories apart. Blocks from
//! different sources are L2-normalized per column and stacked into the
//! semantic matrix consumed by the classifier.

mod category;
mod gmm;
mod pipeline;
mod semantic;
mod transform;

pub use category::{encode_categories, encoding_matrix, suppress_smallest, suppression_count, CategoryEncoding};
pub use gmm::{gmm_fit, responsibilities, GmmFit, GmmFitOptions, GmmModel};
pub use pipeline::{build_visual_encoding, encode_with_codebook, VisualEncoding, VisualEncodingConfig};
pub use semantic::{hybrid_concat, SemanticBlock, SemanticMatrix};
pub use transform::{
    build_laplacian, leading_eigenpair, learn_transform, separation_objective, step_matrix, EigenPair,
    PowerIterationOptions, RowStep, SeparationProblem, TransformMatrix,
};
