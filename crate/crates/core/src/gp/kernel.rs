use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::Points;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Matérn 3/2 hyperparameters, stored as logs.
///
/// `log_lengthscales` holds one entry for a shared lengthscale or one per
/// input dimension (ARD).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub log_amplitude: f64,
    pub log_lengthscales: Vec<f64>,
}

impl KernelParams {
    pub fn new(amplitude: f64, lengthscale: f64) -> Self {
        KernelParams {
            log_amplitude: amplitude.ln(),
            log_lengthscales: vec![lengthscale.ln()],
        }
    }

    pub fn ard(amplitude: f64, lengthscales: &[f64]) -> Self {
        KernelParams {
            log_amplitude: amplitude.ln(),
            log_lengthscales: lengthscales.iter().map(|l| l.ln()).collect(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.log_amplitude.exp()
    }

    /// Signal variance `alpha^2`.
    pub fn variance(&self) -> f64 {
        (2.0 * self.log_amplitude).exp()
    }

    pub fn is_ard(&self) -> bool {
        self.log_lengthscales.len() > 1
    }

    /// Inverse lengthscale per input dimension.
    pub fn inverse_lengthscales(&self, dim: usize) -> Vec<f64> {
        if self.is_ard() {
            self.log_lengthscales.iter().map(|l| (-l).exp()).collect()
        } else {
            vec![(-self.log_lengthscales[0]).exp(); dim]
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.is_ard() && self.log_lengthscales.len() != dim {
            return Err(Error::Dimension {
                expected: self.log_lengthscales.len(),
                got: dim,
            });
        }
        if self.log_lengthscales.is_empty() {
            return Err(Error::Input("kernel needs at least one lengthscale".into()));
        }
        Ok(())
    }
}

/// Observation noise variance, stored as a log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub log_sigma2: f64,
}

impl NoiseParams {
    pub fn new(sigma2: f64) -> Self {
        NoiseParams {
            log_sigma2: sigma2.ln(),
        }
    }

    pub fn sigma2(&self) -> f64 {
        self.log_sigma2.exp()
    }
}

/// Lengthscale-scaled Euclidean distance.
#[inline]
pub(crate) fn scaled_distance(x: &[f64], y: &[f64], inv_ls: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(inv_ls)
        .map(|((a, b), il)| {
            let d = (a - b) * il;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// `alpha^2 (1 + sqrt3 r) exp(-sqrt3 r)` for scaled distance `r`.
#[inline]
pub(crate) fn matern_from_distance(variance: f64, r: f64) -> f64 {
    let s = SQRT3 * r;
    variance * (1.0 + s) * (-s).exp()
}

pub fn matern32(x: &[f64], x_prime: &[f64], params: &KernelParams) -> Result<f64> {
    if x.len() != x_prime.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            got: x_prime.len(),
        });
    }
    params.check_dim(x.len())?;
    let inv_ls = params.inverse_lengthscales(x.len());
    Ok(matern_from_distance(params.variance(), scaled_distance(x, x_prime, &inv_ls)))
}

/// Cross-covariance matrix `K[i, j] = k(a_i, b_j)`.
pub fn cov_matrix(a: &Points, b: &Points, params: &KernelParams) -> Result<DMatrix<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    params.check_dim(a.dim())?;
    let inv_ls = params.inverse_lengthscales(a.dim());
    let var = params.variance();
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
        matern_from_distance(var, scaled_distance(a.row(i), b.row(j), &inv_ls))
    }))
}

/// Symmetric covariance of a point set with itself.
pub(crate) fn cov_symmetric(a: &Points, params: &KernelParams) -> DMatrix<f64> {
    let n = a.len();
    let inv_ls = params.inverse_lengthscales(a.dim());
    let var = params.variance();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        k[(j, j)] = var;
        for i in (j + 1)..n {
            let v = matern_from_distance(var, scaled_distance(a.row(i), a.row(j), &inv_ls));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Derivative of `k(x, y)` with respect to each log-lengthscale, added
/// into `out` after scaling by `weight`.
///
/// `d k / d log l_d = 3 alpha^2 exp(-sqrt3 r) ((x_d - y_d) / l_d)^2`, which
/// stays finite at `r = 0`.
#[inline]
pub(crate) fn accumulate_lengthscale_grad(
    x: &[f64],
    y: &[f64],
    inv_ls: &[f64],
    variance: f64,
    weight: f64,
    ard: bool,
    out: &mut [f64],
) {
    let r = scaled_distance(x, y, inv_ls);
    let e = 3.0 * variance * (-SQRT3 * r).exp() * weight;
    if ard {
        for d in 0..x.len() {
            let u = (x[d] - y[d]) * inv_ls[d];
            out[d] += e * u * u;
        }
    } else {
        out[0] += e * r * r;
    }
}
