use nalgebra::{DMatrix, DVector};

use super::kernel::{accumulate_lengthscale_grad, cov_matrix, cov_symmetric, KernelParams, NoiseParams};
use super::linalg::{cholesky_jittered, JitterPolicy, JitteredCholesky};
use super::GaussianPrediction;
use crate::error::{Error, Result};
use crate::points::Points;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Gradient of the log marginal likelihood with respect to the log
/// hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGradient {
    pub log_amplitude: f64,
    pub log_lengthscales: Vec<f64>,
    pub log_sigma2: f64,
}

/// A fitted dense GP: the factorized training system plus the weights
/// `(K + sigma^2 I)^{-1} y`.
#[derive(Debug, Clone)]
pub struct ExactGp {
    x: Points,
    y: DVector<f64>,
    kernel: KernelParams,
    noise: NoiseParams,
    factor: JitteredCholesky,
    weights: DVector<f64>,
}

impl ExactGp {
    pub fn fit(x: &Points, y: &[f64], kernel: &KernelParams, noise: &NoiseParams, jitter: JitterPolicy) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Input("exact GP needs at least one training point".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: y.len(),
            });
        }
        kernel.check_dim(x.dim())?;
        let mut k = cov_symmetric(x, kernel);
        let s2 = noise.sigma2();
        for i in 0..k.nrows() {
            k[(i, i)] += s2;
        }
        let factor = cholesky_jittered(&k, kernel.variance(), jitter)?;
        let y = DVector::from_column_slice(y);
        let weights = factor.chol.solve(&y);
        Ok(ExactGp {
            x: x.clone(),
            y,
            kernel: kernel.clone(),
            noise: *noise,
            factor,
            weights,
        })
    }

    pub fn jitter(&self) -> f64 {
        self.factor.jitter
    }

    /// Marginal predictions at each query point.
    pub fn predict(&self, query: &Points) -> Result<Vec<GaussianPrediction>> {
        let k_qn = cov_matrix(query, &self.x, &self.kernel)?;
        let mean = &k_qn * &self.weights;
        let v = self.factor.chol.l_dirty().solve_lower_triangular(&k_qn.transpose()).ok_or_else(|| {
            Error::NotPositiveDefinite {
                size: self.x.len(),
                max_jitter: self.factor.jitter,
                min_diag: 0.0,
            }
        })?;
        let prior = self.kernel.variance();
        let s2 = self.noise.sigma2();
        Ok((0..query.len())
            .map(|i| {
                let reduction: f64 = v.column(i).iter().map(|a| a * a).sum();
                let latent_var = (prior - reduction).max(0.0);
                GaussianPrediction {
                    mean: mean[i],
                    latent_var,
                    obs_var: latent_var + s2,
                }
            })
            .collect())
    }

    /// Posterior mean and full latent covariance over the query batch.
    pub fn predict_full(&self, query: &Points) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let k_qn = cov_matrix(query, &self.x, &self.kernel)?;
        let k_qq = cov_symmetric(query, &self.kernel);
        let mean = &k_qn * &self.weights;
        let solved = self.factor.solve(&k_qn.transpose());
        let cov = k_qq - &k_qn * solved;
        Ok((mean, (&cov + cov.transpose()) * 0.5))
    }

    /// `log N(y | 0, K + sigma^2 I)` from the Cholesky factor.
    pub fn log_marginal(&self) -> f64 {
        let n = self.y.len() as f64;
        -0.5 * self.y.dot(&self.weights) - 0.5 * self.factor.log_det() - 0.5 * n * LN_2PI
    }

    /// `1/2 tr((w w^T - K^{-1}) dK/dtheta)` for every log hyperparameter.
    pub fn log_marginal_grad(&self) -> HyperGradient {
        let n = self.x.len();
        let dim = self.x.dim();
        let mut outer = &self.weights * self.weights.transpose();
        outer -= self.factor.inverse();
        let var = self.kernel.variance();
        let inv_ls = self.kernel.inverse_lengthscales(dim);
        let ard = self.kernel.is_ard();

        let mut d_ls = vec![0.0; self.kernel.log_lengthscales.len()];
        let mut d_amp = 0.0;
        let k = cov_symmetric(&self.x, &self.kernel);
        for j in 0..n {
            for i in 0..n {
                let w = outer[(i, j)];
                d_amp += w * 2.0 * k[(i, j)];
                if i != j {
                    accumulate_lengthscale_grad(self.x.row(i), self.x.row(j), &inv_ls, var, w, ard, &mut d_ls);
                }
            }
        }
        // The jitter is proportional to the signal variance.
        let trace: f64 = outer.diagonal().sum();
        d_amp += trace * 2.0 * self.factor.jitter;
        let d_noise = trace * self.noise.sigma2();
        HyperGradient {
            log_amplitude: 0.5 * d_amp,
            log_lengthscales: d_ls.into_iter().map(|g| 0.5 * g).collect(),
            log_sigma2: 0.5 * d_noise,
        }
    }
}

pub fn exact_posterior_predict(
    x_train: &Points,
    y: &[f64],
    x_query: &Points,
    kernel: &KernelParams,
    noise: &NoiseParams,
) -> Result<Vec<GaussianPrediction>> {
    ExactGp::fit(x_train, y, kernel, noise, JitterPolicy::default())?.predict(x_query)
}

pub fn log_marginal(x_train: &Points, y: &[f64], kernel: &KernelParams, noise: &NoiseParams) -> Result<f64> {
    Ok(ExactGp::fit(x_train, y, kernel, noise, JitterPolicy::default())?.log_marginal())
}
