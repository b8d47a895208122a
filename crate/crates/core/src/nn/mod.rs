//! Minimal dense-network substrate with hand-written backward passes.
//!
//! Layers own their parameters and gradient accumulators. Models expose them
//! through [`ParamStore`] so the optimizer and checkpointing can walk every
//! parameter in a fixed order.

mod adam;
mod layer;
mod mlp;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use layer::{Activation, DenseLayer, LayerTrace};
pub use mlp::{Mlp, MlpTrace};
pub use params::{ParamMut, ParamRef, ParamStore, Snapshot, SnapshotEntry};
