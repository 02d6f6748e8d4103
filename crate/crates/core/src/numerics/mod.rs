//! Dense linear algebra, seeded random generation, optimizers, PCA and kernels.

pub mod kernel;
pub mod matrix;
pub mod optim;
pub mod pca;
pub mod rng;

pub use kernel::{
    cholesky, cholesky_solve, finite_difference_grad, gamma_from_length_scale, rbf_kernel,
};
pub use matrix::{dot, norm, squared_distance, Matrix};
pub use optim::{adam_step, lbfgs_minimize, AdamState, LbfgsOptions, LbfgsResult};
pub use pca::{pca_fit, pca_transform, symmetric_eigen, PcaModel};
pub use rng::{beta_sample, RngState};
