//! Black-spot identification benchmark.
//!
//! Loads the BSNG road-accident table against a versioned schema, encodes it
//! (label, one-hot, PCA), learns autoencoder embeddings, augments with MixUp
//! and cross-validates a zoo of classifiers under a leakage-safe protocol.

pub mod error;
pub mod augment;
pub mod baselines;
pub mod container;
pub mod dataset;
pub mod encoding;
pub mod evaluation;
pub mod neural;
pub mod numerics;
pub mod pipeline;

pub use error::{ArtifactError, DatasetError, Error, Result, RowError};
