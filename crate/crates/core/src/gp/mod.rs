//! Matérn 3/2 kernel and dense Gaussian process regression.
//!
//! Everything here works in standardized coordinates with a zero prior
//! mean; the surrogate layer owns conversion to and from physical units.

pub(crate) mod exact;
pub(crate) mod kernel;
pub(crate) mod linalg;

pub use exact::{exact_posterior_predict, log_marginal, ExactGp, HyperGradient};
pub use kernel::{cov_matrix, matern32, KernelParams, NoiseParams, SQRT3};
pub use linalg::{cholesky_jittered, JitterPolicy, JitteredCholesky};

use serde::{Deserialize, Serialize};

/// Gaussian predictive marginal at one query input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrediction {
    pub mean: f64,
    /// Variance of the latent function value.
    pub latent_var: f64,
    /// Variance of a new noisy observation (`latent_var + sigma^2`).
    pub obs_var: f64,
}
