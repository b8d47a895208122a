//! Core numerics for learning classifiers from noisy-labelled features.
//!
//! The crate bundles:
//!
//! * [`nn`]: dense layers with analytic gradients and an Adam optimizer,
//! * [`vae`]: the semantic VAE whose latent layer feeds a category-level
//!   classifier, trained with a reconstruction-weighted softmax loss,
//! * [`encoding`]: GMM visual codebooks, per-category responsibility
//!   encodings and the incremental near-orthonormal separation transform,
//! * [`data`]: seeded synthetic datasets with hidden ground truth,
//! * [`eval`]: metrics and the ablation / noise-sweep harness.
//!
//! Everything is deterministic given explicit seeds. The crate is `no_std`
//! (with `alloc`); file formats and the command line live in the `wsci` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod encoding;
mod error;
pub mod eval;
pub mod linalg;
pub mod math;
pub mod nn;
pub mod rng;
pub mod vae;

pub use error::{Error, Result};
pub use linalg::Matrix;
