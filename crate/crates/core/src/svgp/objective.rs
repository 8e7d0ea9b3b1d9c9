//! ELBO, its gradient, the inducing-variable KL term and the sparse
//! predictive distribution, all in standardized coordinates.
//!
//! With `A = K_nm K_mm^{-1}`, the marginals of `q(f)` are
//! `mu = A m` and `v = k_nn - diag(A K_mn) + diag(A S A^T)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gp::kernel::{accumulate_lengthscale_grad, cov_symmetric, matern_from_distance, scaled_distance};
use crate::gp::{cholesky_jittered, GaussianPrediction, JitterPolicy, JitteredCholesky, KernelParams, NoiseParams, SQRT3};
use crate::points::Points;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const PREDICT_CHUNK: usize = 4096;

/// Covariance of `q(u)`.
#[derive(Debug, Clone, Copy)]
pub enum InducingCov<'a> {
    /// Mean-field: per-inducing-variable variances.
    MeanField(&'a [f64]),
    /// Full covariance matrix.
    Full(&'a DMatrix<f64>),
}

/// Borrowed view of everything that defines a sparse GP posterior.
#[derive(Debug, Clone, Copy)]
pub struct SparsePosterior<'a> {
    pub kernel: &'a KernelParams,
    pub noise: &'a NoiseParams,
    pub z: &'a Points,
    pub m_u: &'a [f64],
    pub cov: InducingCov<'a>,
    pub jitter: JitterPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboValue {
    pub elbo: f64,
    /// Scaled expected log-likelihood term.
    pub expected_loglik: f64,
    pub kl: f64,
}

/// Gradient of the ELBO with respect to every unconstrained parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ElboGradient {
    pub m_u: Vec<f64>,
    pub log_s_u: Vec<f64>,
    /// Row-major, same layout as the inducing inputs.
    pub z: Vec<f64>,
    pub log_amplitude: f64,
    pub log_lengthscales: Vec<f64>,
    pub log_sigma2: f64,
}

impl ElboGradient {
    /// Concatenation in the order m_u, log_s_u, z, log_amplitude,
    /// log_lengthscales, log_sigma2.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m_u.len() * 2 + self.z.len() + self.log_lengthscales.len() + 2);
        out.extend_from_slice(&self.m_u);
        out.extend_from_slice(&self.log_s_u);
        out.extend_from_slice(&self.z);
        out.push(self.log_amplitude);
        out.extend_from_slice(&self.log_lengthscales);
        out.push(self.log_sigma2);
        out
    }
}

/// Cross-covariance `K(Z, X)` plus the per-entry `alpha^2 exp(-sqrt3 r)`
/// factor reused by the derivatives.
fn cross_cov(z: &Points, x: &Points, kernel: &KernelParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let var = kernel.variance();
    let inv_ls = kernel.inverse_lengthscales(z.dim());
    let mut k = DMatrix::zeros(z.len(), x.len());
    let mut e = DMatrix::zeros(z.len(), x.len());
    for b in 0..x.len() {
        let xb = x.row(b);
        for j in 0..z.len() {
            let r = scaled_distance(z.row(j), xb, &inv_ls);
            k[(j, b)] = matern_from_distance(var, r);
            e[(j, b)] = var * (-SQRT3 * r).exp();
        }
    }
    (k, e)
}

impl<'a> SparsePosterior<'a> {
    fn check(&self, x: Option<&Points>) -> Result<()> {
        let m = self.z.len();
        if m == 0 {
            return Err(Error::Input("need at least one inducing point".into()));
        }
        self.kernel.check_dim(self.z.dim())?;
        if self.m_u.len() != m {
            return Err(Error::Dimension { expected: m, got: self.m_u.len() });
        }
        match self.cov {
            InducingCov::MeanField(s) if s.len() != m => {
                return Err(Error::Dimension { expected: m, got: s.len() })
            }
            InducingCov::Full(s) if s.shape() != (m, m) => {
                return Err(Error::Dimension { expected: m, got: s.nrows() })
            }
            _ => {}
        }
        if let Some(x) = x {
            if x.dim() != self.z.dim() {
                return Err(Error::Dimension { expected: self.z.dim(), got: x.dim() });
            }
        }
        Ok(())
    }

    fn factor_kmm(&self) -> Result<JitteredCholesky> {
        let kmm = cov_symmetric(self.z, self.kernel);
        cholesky_jittered(&kmm, self.kernel.variance(), self.jitter)
    }

    /// `KL[q(u) || p(u)]` given the factor of `K_mm`.
    fn kl_with(&self, factor: &JitteredCholesky, kinv: &DMatrix<f64>) -> Result<f64> {
        let m = self.z.len();
        let mu = DVector::from_column_slice(self.m_u);
        let beta = factor.chol.solve(&mu);
        let (trace, log_det_s) = match self.cov {
            InducingCov::MeanField(s) => (
                (0..m).map(|j| kinv[(j, j)] * s[j]).sum::<f64>(),
                s.iter().map(|v| v.ln()).sum::<f64>(),
            ),
            InducingCov::Full(s) => {
                let chol_s = cholesky_jittered(s, 1.0, JitterPolicy::none())?;
                ((kinv * s).trace(), chol_s.log_det())
            }
        };
        Ok(0.5 * (trace + mu.dot(&beta) - m as f64 + factor.log_det() - log_det_s))
    }

    pub fn kl(&self) -> Result<f64> {
        self.check(None)?;
        let factor = self.factor_kmm()?;
        let kinv = factor.inverse();
        self.kl_with(&factor, &kinv)
    }

    /// Gradient of the KL term with respect to the variational mean,
    /// `K_mm^{-1} m`.
    pub fn kl_mean_gradient(&self) -> Result<Vec<f64>> {
        self.check(None)?;
        let factor = self.factor_kmm()?;
        Ok(factor.chol.solve(&DVector::from_column_slice(self.m_u)).as_slice().to_vec())
    }

    /// `diag(A S A^T)` for `A^T` given as `at` (M x B).
    fn explained_var(&self, at: &DMatrix<f64>) -> Vec<f64> {
        match self.cov {
            InducingCov::MeanField(s) => (0..at.ncols())
                .map(|b| at.column(b).iter().zip(s).map(|(a, sj)| a * a * sj).sum())
                .collect(),
            InducingCov::Full(s) => {
                let sa = s * at;
                (0..at.ncols()).map(|b| at.column(b).dot(&sa.column(b))).collect()
            }
        }
    }

    /// Minibatch ELBO: `(n_total / |batch|)` times the batch's expected
    /// log-likelihood, minus the KL term.
    pub fn elbo(&self, x: &Points, y: &[f64], n_total: usize) -> Result<ElboValue> {
        self.check(Some(x))?;
        check_batch(x, y)?;
        let factor = self.factor_kmm()?;
        let kinv = factor.inverse();
        let (kmn, _) = cross_cov(self.z, x, self.kernel);
        let at = factor.solve(&kmn);
        let explained = self.explained_var(&at);
        let var = self.kernel.variance();
        let s2 = self.noise.sigma2();
        let scale = n_total as f64 / x.len() as f64;
        let mut sum = 0.0;
        for b in 0..x.len() {
            let mu = at.column(b).iter().zip(self.m_u).map(|(a, m)| a * m).sum::<f64>();
            let q = at.column(b).dot(&kmn.column(b));
            let v = var - q + explained[b];
            let r = y[b] - mu;
            sum += -0.5 * (LN_2PI + self.noise.log_sigma2) - 0.5 * (r * r + v) / s2;
        }
        let expected_loglik = scale * sum;
        let kl = self.kl_with(&factor, &kinv)?;
        Ok(ElboValue {
            elbo: expected_loglik - kl,
            expected_loglik,
            kl,
        })
    }

    /// Predictive marginals at `query`: `mean = A m`,
    /// `latent_var = k - A K_m* + A S A^T`, `obs_var = latent_var + sigma^2`.
    pub fn predict(&self, query: &Points) -> Result<Vec<GaussianPrediction>> {
        self.check(Some(query))?;
        let factor = self.factor_kmm()?;
        let var = self.kernel.variance();
        let s2 = self.noise.sigma2();
        let mut out = Vec::with_capacity(query.len());
        let indices: Vec<usize> = (0..query.len()).collect();
        for chunk in indices.chunks(PREDICT_CHUNK) {
            let q_chunk = query.select(chunk);
            let (kmq, _) = cross_cov(self.z, &q_chunk, self.kernel);
            let at = factor.solve(&kmq);
            let explained = self.explained_var(&at);
            out.extend((0..q_chunk.len()).map(|b| {
                let mean = at.column(b).iter().zip(self.m_u).map(|(a, m)| a * m).sum::<f64>();
                let q = at.column(b).dot(&kmq.column(b));
                let latent_var = (var - q + explained[b]).max(0.0);
                GaussianPrediction { mean, latent_var, obs_var: latent_var + s2 }
            }));
        }
        Ok(out)
    }

    /// ELBO and its analytic gradient. Mean-field covariance only; the
    /// gradient with respect to `log_s_u` is taken through `S = exp(2 log_s_u)`.
    pub fn elbo_grad(&self, x: &Points, y: &[f64], n_total: usize) -> Result<(ElboValue, ElboGradient)> {
        self.check(Some(x))?;
        check_batch(x, y)?;
        let s = match self.cov {
            InducingCov::MeanField(s) => s,
            InducingCov::Full(_) => {
                return Err(Error::Input("analytic gradients need a mean-field q(u)".into()))
            }
        };
        let m = self.z.len();
        let nb = x.len();
        let dim = self.z.dim();
        let var = self.kernel.variance();
        let inv_ls = self.kernel.inverse_lengthscales(dim);
        let ard = self.kernel.is_ard();
        let s2 = self.noise.sigma2();
        let scale = n_total as f64 / nb as f64;

        let kmm = cov_symmetric(self.z, self.kernel);
        let factor = cholesky_jittered(&kmm, var, self.jitter)?;
        let kinv = factor.inverse();
        let (kmn, emn) = cross_cov(self.z, x, self.kernel);
        let at = factor.solve(&kmn);
        let mu_vec = DVector::from_column_slice(self.m_u);
        let beta = factor.chol.solve(&mu_vec);

        // Marginals and the expected log-likelihood.
        let mut resid = DVector::zeros(nb);
        let mut quad = 0.0;
        for b in 0..nb {
            let col = at.column(b);
            let mu = col.dot(&mu_vec);
            let q = col.dot(&kmn.column(b));
            let sa: f64 = col.iter().zip(s).map(|(a, sj)| a * a * sj).sum();
            let v = var - q + sa;
            let r = y[b] - mu;
            resid[b] = r;
            quad += r * r + v;
        }
        let expected_loglik = scale * (-0.5 * nb as f64 * (LN_2PI + self.noise.log_sigma2) - 0.5 * quad / s2);
        let trace: f64 = (0..m).map(|j| kinv[(j, j)] * s[j]).sum();
        let log_det_s: f64 = s.iter().map(|v| v.ln()).sum();
        let kl = 0.5 * (trace + mu_vec.dot(&beta) - m as f64 + factor.log_det() - log_det_s);
        let value = ElboValue { elbo: expected_loglik - kl, expected_loglik, kl };

        // Sensitivities with respect to the marginal means and variances.
        let g_mu = &resid * (scale / s2);
        let g_v = -0.5 * scale / s2;

        let at_g = &at * &g_mu;
        let d_m: Vec<f64> = (0..m).map(|j| at_g[j] - beta[j]).collect();
        let d_log_s: Vec<f64> = (0..m)
            .map(|j| {
                let col_sq: f64 = at.row(j).iter().map(|a| a * a).sum();
                2.0 * s[j] * g_v * col_sq - s[j] * kinv[(j, j)] + 1.0
            })
            .collect();
        let d_log_sigma2 = scale * (-0.5 * nb as f64 + 0.5 * quad / s2);

        // dELBO / dK_mn (M x B).
        let mut ks = kinv.clone();
        for j in 0..m {
            ks.column_mut(j).scale_mut(s[j]);
        }
        let mut g_kmn = (&ks * &at - &at) * (2.0 * g_v);
        g_kmn += &beta * g_mu.transpose();

        // dELBO / dK_mm (M x M), jitter included.
        let w = &at * at.transpose();
        let ks_w = &ks * &w;
        let mut g_kmm = &w * g_v;
        g_kmm -= (&ks_w + ks_w.transpose()) * g_v;
        g_kmm -= &at_g * beta.transpose();
        g_kmm += (&ks * &kinv) * 0.5;
        g_kmm += (&beta * beta.transpose()) * 0.5;
        g_kmm -= &kinv * 0.5;

        // Chain rule into the log hyperparameters and inducing inputs.
        let mut d_log_amp = g_kmn.dot(&kmn) * 2.0 + 2.0 * g_v * nb as f64 * var;
        d_log_amp += 2.0 * g_kmm.dot(&kmm);
        d_log_amp += 2.0 * factor.jitter * g_kmm.trace();
        let mut d_ls = vec![0.0; self.kernel.log_lengthscales.len()];
        let mut d_z = vec![0.0; m * dim];
        let inv_ls2: Vec<f64> = inv_ls.iter().map(|v| v * v).collect();

        for b in 0..nb {
            let xb = x.row(b);
            for j in 0..m {
                let g = g_kmn[(j, b)];
                let zj = self.z.row(j);
                accumulate_lengthscale_grad(zj, xb, &inv_ls, var, g, ard, &mut d_ls);
                let c = -3.0 * emn[(j, b)] * g;
                for d in 0..dim {
                    d_z[j * dim + d] += c * (zj[d] - xb[d]) * inv_ls2[d];
                }
            }
        }
        for i in 0..m {
            let zi = self.z.row(i);
            for j in 0..m {
                if i == j {
                    continue;
                }
                let zj = self.z.row(j);
                accumulate_lengthscale_grad(zi, zj, &inv_ls, var, g_kmm[(i, j)], ard, &mut d_ls);
                let r = scaled_distance(zi, zj, &inv_ls);
                let c = -3.0 * var * (-SQRT3 * r).exp() * (g_kmm[(i, j)] + g_kmm[(j, i)]);
                for d in 0..dim {
                    d_z[i * dim + d] += c * (zi[d] - zj[d]) * inv_ls2[d];
                }
            }
        }

        Ok((
            value,
            ElboGradient {
                m_u: d_m,
                log_s_u: d_log_s,
                z: d_z,
                log_amplitude: d_log_amp,
                log_lengthscales: d_ls,
                log_sigma2: d_log_sigma2,
            },
        ))
    }
}

fn check_batch(x: &Points, y: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Input("ELBO needs a non-empty batch".into()));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    Ok(())
}
