//! Sparse variational GP regression with a mean-field `q(u)`.
//!
//! Inputs and targets are standardized before training; `z`, `m_u` and
//! `log_s_u` live in the standardized space and [`SvgpModel::predict`]
//! returns millimetres.

mod adam;
mod objective;
mod train;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use objective::{ElboGradient, ElboValue, InducingCov, SparsePosterior};
pub use train::{train, TrainOutcome};

use crate::dataset::{RegressionDataset, Task};
use crate::error::{Error, Result};
use crate::gp::{GaussianPrediction, JitterPolicy, KernelParams, NoiseParams};
use crate::points::Points;

/// Per-dimension affine standardization `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and std per column. Constant columns get std 1.
    pub fn fit(points: &Points) -> Self {
        let n = points.len() as f64;
        let dim = points.dim();
        let mut mean = vec![0.0; dim];
        for row in points.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in points.rows() {
            for d in 0..dim {
                var[d] += (row[d] - mean[d]).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, points: &Points) -> Result<Points> {
        if points.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: points.dim(),
            });
        }
        let mut out = points.clone();
        for i in 0..out.len() {
            for (d, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[d]) / self.std[d];
            }
        }
        Ok(out)
    }

    pub fn apply_scalar(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| (v - self.mean[0]) / self.std[0]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub m_inducing: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// Clamped to the dataset size when larger.
    pub minibatch_size: usize,
    pub seed: u64,
    /// Initial diagonal jitter on `K_mm`, relative to the kernel variance.
    pub jitter: f64,
    /// One lengthscale per input dimension instead of a shared one.
    pub ard: bool,
}

impl TrainConfig {
    pub fn for_task(task: Task) -> Self {
        TrainConfig {
            m_inducing: 100,
            iterations: match task {
                Task::I | Task::II => 1000,
                Task::III => 2000,
            },
            learning_rate: 0.01,
            minibatch_size: 1024,
            seed: 0,
            jitter: 1e-6,
            ard: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.m_inducing >= 1
            && self.minibatch_size >= 1
            && self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && self.jitter.is_finite()
            && self.jitter >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training configuration {self:?}")))
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(s).map_err(|source| Error::Json {
            context: "training config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Inducing inputs and the mean-field variational distribution over the
/// inducing variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalParams {
    pub z: Points,
    pub m_u: Vec<f64>,
    /// Log standard deviations of `q(u)`.
    pub log_s_u: Vec<f64>,
}

impl VariationalParams {
    pub fn variances(&self) -> Vec<f64> {
        self.log_s_u.iter().map(|l| (2.0 * l).exp()).collect()
    }
}

/// A trained (or initialized) sparse surrogate for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvgpModel {
    pub task: Task,
    pub input_stats: Standardizer,
    /// Target mean and std, mm.
    pub output_stats: Standardizer,
    pub kernel: KernelParams,
    pub noise: NoiseParams,
    pub variational: VariationalParams,
    pub jitter: f64,
    pub train_config: TrainConfig,
}

/// Standardizers, `M` randomly chosen training inputs as inducing points
/// (each coordinate perturbed by up to `1e-6`), `m_u = 0`, `s_u = 1`, unit
/// amplitude and lengthscale and `sigma^2 = 0.01`.
pub fn init_model(dataset: &RegressionDataset, config: &TrainConfig) -> Result<SvgpModel> {
    config.validate()?;
    let n = dataset.len();
    if n == 0 {
        return Err(Error::Input("cannot train on an empty dataset".into()));
    }
    if dataset.inputs.dim() != dataset.task.input_dim() {
        return Err(Error::Dimension {
            expected: dataset.task.input_dim(),
            got: dataset.inputs.dim(),
        });
    }
    let m = config.m_inducing;
    if m > n {
        return Err(Error::Config(format!("{m} inducing points requested for {n} training rows")));
    }
    let input_stats = Standardizer::fit(&dataset.inputs);
    let output_stats = Standardizer::fit(&Points::from_scalars(&dataset.targets));
    let x = input_stats.apply(&dataset.inputs)?;

    let mut rng = init_rng(config.seed);
    let picked = sample_indices(&mut rng, n, m).into_vec();
    let mut z = x.select(&picked);
    for v in z.as_mut_slice() {
        *v += rng.random_range(-1e-6..=1e-6);
    }
    let dim = x.dim();
    let kernel = if config.ard {
        KernelParams::ard(1.0, &vec![1.0; dim])
    } else {
        KernelParams::new(1.0, 1.0)
    };
    Ok(SvgpModel {
        task: dataset.task,
        input_stats,
        output_stats,
        kernel,
        noise: NoiseParams::new(0.01),
        variational: VariationalParams {
            z,
            m_u: vec![0.0; m],
            log_s_u: vec![0.0; m],
        },
        jitter: config.jitter,
        train_config: config.clone(),
    })
}

pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

impl SvgpModel {
    pub fn m_inducing(&self) -> usize {
        self.variational.m_u.len()
    }

    pub fn input_dim(&self) -> usize {
        self.variational.z.dim()
    }

    pub fn jitter_policy(&self) -> JitterPolicy {
        JitterPolicy::starting_at(self.jitter)
    }

    /// Runs `f` with a borrowed posterior view in standardized space.
    pub fn with_posterior<T>(&self, f: impl FnOnce(&SparsePosterior<'_>) -> T) -> T {
        let variances = self.variational.variances();
        let post = SparsePosterior {
            kernel: &self.kernel,
            noise: &self.noise,
            z: &self.variational.z,
            m_u: &self.variational.m_u,
            cov: InducingCov::MeanField(&variances),
            jitter: self.jitter_policy(),
        };
        f(&post)
    }

    /// `KL[q(u) || p(u)]`.
    pub fn kl(&self) -> Result<f64> {
        self.with_posterior(|p| p.kl())
    }

    /// Minibatch ELBO for standardized inputs and targets.
    pub fn elbo(&self, x_std: &Points, y_std: &[f64], n_total: usize) -> Result<ElboValue> {
        self.with_posterior(|p| p.elbo(x_std, y_std, n_total))
    }

    pub fn elbo_grad(&self, x_std: &Points, y_std: &[f64], n_total: usize) -> Result<(ElboValue, ElboGradient)> {
        self.with_posterior(|p| p.elbo_grad(x_std, y_std, n_total))
    }

    /// Standardizes raw inputs and targets with the model's statistics.
    pub fn standardize(&self, x: &Points, y: &[f64]) -> Result<(Points, Vec<f64>)> {
        Ok((self.input_stats.apply(x)?, self.output_stats.apply_scalar(y)))
    }

    /// Predictions in standardized output units.
    pub fn predict_standardized(&self, x_std: &Points) -> Result<Vec<GaussianPrediction>> {
        self.with_posterior(|p| p.predict(x_std))
    }

    /// Predictions in millimetres for raw (unstandardized) query inputs.
    pub fn predict(&self, query: &Points) -> Result<Vec<GaussianPrediction>> {
        if query.dim() != self.task.input_dim() {
            return Err(Error::Dimension {
                expected: self.task.input_dim(),
                got: query.dim(),
            });
        }
        let x = self.input_stats.apply(query)?;
        let mu = self.output_stats.mean[0];
        let sd = self.output_stats.std[0];
        Ok(self
            .predict_standardized(&x)?
            .into_iter()
            .map(|p| GaussianPrediction {
                mean: p.mean * sd + mu,
                latent_var: p.latent_var * sd * sd,
                obs_var: p.obs_var * sd * sd,
            })
            .collect())
    }

    /// Unconstrained parameters in the order m_u, log_s_u, z,
    /// log_amplitude, log_lengthscales, log_sigma2.
    pub fn params_flat(&self) -> Vec<f64> {
        let v = &self.variational;
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(&v.m_u);
        out.extend_from_slice(&v.log_s_u);
        out.extend_from_slice(v.z.as_slice());
        out.push(self.kernel.log_amplitude);
        out.extend_from_slice(&self.kernel.log_lengthscales);
        out.push(self.noise.log_sigma2);
        out
    }

    pub fn n_params(&self) -> usize {
        let m = self.m_inducing();
        2 * m + self.variational.z.as_slice().len() + self.kernel.log_lengthscales.len() + 2
    }

    pub fn set_params_flat(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params(), "flat parameter vector has the wrong length");
        let m = self.m_inducing();
        let nz = self.variational.z.as_slice().len();
        let nl = self.kernel.log_lengthscales.len();
        let (m_u, rest) = params.split_at(m);
        let (log_s, rest) = rest.split_at(m);
        let (z, rest) = rest.split_at(nz);
        self.variational.m_u.copy_from_slice(m_u);
        self.variational.log_s_u.copy_from_slice(log_s);
        self.variational.z.as_mut_slice().copy_from_slice(z);
        self.kernel.log_amplitude = rest[0];
        self.kernel.log_lengthscales.copy_from_slice(&rest[1..1 + nl]);
        self.noise.log_sigma2 = rest[1 + nl];
    }

    /// Checks shapes and finiteness, e.g. after loading from disk.
    pub fn validate(&self) -> Result<()> {
        let d = self.task.input_dim();
        let m = self.m_inducing();
        let bad = |msg: String| Err(Error::Format { what: "model", detail: msg });
        if self.input_stats.dim() != d || self.output_stats.dim() != 1 {
            return bad(format!("standardizer dimensions do not match task {}", self.task));
        }
        if self.variational.z.dim() != d || self.variational.z.len() != m || self.variational.log_s_u.len() != m {
            return bad("inducing point shapes are inconsistent".into());
        }
        let nl = self.kernel.log_lengthscales.len();
        if nl != 1 && nl != d {
            return bad(format!("{nl} lengthscales for input dimension {d}"));
        }
        if self.input_stats.std.iter().chain(&self.output_stats.std).any(|s| !(*s > 0.0) || !s.is_finite()) {
            return bad("standardizer std must be positive".into());
        }
        if self.params_flat().iter().any(|v| !v.is_finite()) || !(self.jitter >= 0.0) {
            return bad("non-finite parameter".into());
        }
        Ok(())
    }
}
