//! Background subtraction based on the Local Self-Similarity (LSS) descriptor.
//!
//! The pipeline models each background pixel by the log-polar LSS descriptor
//! of its surrounding region, learned over a set of training frames by
//! per-pixel descriptor clustering with frequency counting. Detection
//! thresholds the Euclidean distance between a frame's descriptors and the
//! model, and a morphological post-processing stage refines object
//! boundaries using the stored background colors. An evaluation harness
//! scores masks against changedetection-style ground truth and ranks
//! methods by average metric rank.
//!
//! All descriptor math is generic over the scalar type through the [`Real`]
//! trait; `f32` is what the persisted model format stores and what the CLI
//! uses, `f64` is handy for oracles and tests.

pub mod detect;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod lss;
pub mod model;
pub mod postprocess;
mod real;

pub use error::{Error, Result};
pub use real::Real;

/// Descriptor grid over `f32`, the scalar the model file stores.
pub type DescriptorGrid32 = lss::DescriptorGrid<f32>;
pub type DescriptorGrid64 = lss::DescriptorGrid<f64>;
pub type LssParams32 = lss::LssParams<f32>;
pub type LssParams64 = lss::LssParams<f64>;
pub type BackgroundModel32 = model::BackgroundModel<f32>;
pub type BackgroundModel64 = model::BackgroundModel<f64>;
pub type TrainingState32 = model::TrainingState<f32>;
pub type TrainingState64 = model::TrainingState<f64>;
