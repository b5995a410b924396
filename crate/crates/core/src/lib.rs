//! Surgical skill classification from robot kinematics.
//!
//! A one-dimensional convolutional network reads fixed-length windows of
//! 38-channel manipulator kinematics and predicts one of three skill levels
//! (Novice, Intermediate, Expert). The crate covers the whole pipeline:
//!
//! - [`tensor`]: arrays and differentiable layer kernels with exact gradients
//! - [`network`]: the fixed conv-pool x3 / dense x2 / softmax model
//! - [`optim`]: Adam, mini-batch training and best-model selection
//! - [`data`]: trial parsing, normalization, window cropping, labeling, synthetic corpora
//! - [`eval`]: leave-one-supertrial-out and hold-out experiments with per-class metrics
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common 64-bit instantiation.

pub mod data;
pub mod error;
pub mod eval;
pub mod network;
pub mod optim;
pub mod scalar;
pub mod seed;
pub mod tensor;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = tensor::Tensor3<f64>;
pub type Tensor32 = tensor::Tensor3<f32>;
pub type Params = network::ModelParams<f64>;
pub type Params32 = network::ModelParams<f32>;
