//! Wasserstein projection pursuit.
//!
//! Finds orthonormal directions along which a sample is farthest, in
//! 2-Wasserstein distance, from the standard Gaussian, and uses them to
//! recover a planted non-Gaussian subspace and estimate its dimension.

pub mod cli;
pub mod datagen;
pub mod error;
pub mod gaussmath;
pub mod metrics;
pub mod pursuit;
pub mod recovery;
pub mod transport;

mod data;
mod frame;

pub use error::{Error, Result};
