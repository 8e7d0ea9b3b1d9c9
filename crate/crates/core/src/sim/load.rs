use rand::Rng;
use rand_distr::{Distribution, Uniform, weighted::WeightedIndex};

use super::config::SimConfig;
use crate::error::{Error, Result};

/// A stationary interval of wave loading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeaState {
    /// Significant wave height, m.
    pub hs: f64,
    /// Zero up-crossing period, s.
    pub tz: f64,
    /// Hours.
    pub duration: f64,
}

/// Fatigue loading pair of a sea state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPair {
    /// Stress range, MPa.
    pub delta_s: f64,
    /// Cycles per hour.
    pub n_avg: f64,
}

/// Categorical sampler over the configured scatter diagram plus the uniform
/// duration draw. Built once per ensemble.
#[derive(Debug, Clone)]
pub struct SeaStateSampler {
    cells: Vec<(f64, f64)>,
    index: WeightedIndex<f64>,
    duration: Uniform<f64>,
}

impl SeaStateSampler {
    pub fn new(config: &SimConfig) -> Result<Self> {
        let cells = config.load.scatter.iter().map(|c| (c.hs_m, c.tz_s)).collect();
        let index = WeightedIndex::new(config.load.scatter.iter().map(|c| c.probability))
            .map_err(|e| Error::Config(format!("scatter table: {e}")))?;
        let d = config.duration_hours;
        let duration = Uniform::new_inclusive(d.min, d.max)
            .map_err(|e| Error::Config(format!("duration bounds: {e}")))?;
        Ok(SeaStateSampler {
            cells,
            index,
            duration,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SeaState {
        let (hs, tz) = self.cells[self.index.sample(rng)];
        SeaState {
            hs,
            tz,
            duration: self.duration.sample(rng),
        }
    }

    /// Infinite stream of sea states drawn from `rng`.
    pub fn stream<'a, R: Rng + 'a>(&'a self, mut rng: R) -> impl Iterator<Item = SeaState> + 'a {
        std::iter::repeat_with(move || self.sample(&mut rng))
    }
}

pub fn sample_sea_state<R: Rng + ?Sized>(rng: &mut R, config: &SimConfig) -> Result<SeaState> {
    Ok(SeaStateSampler::new(config)?.sample(rng))
}

/// Linear hydrodynamic transfer: stress range proportional to wave height,
/// one load cycle per zero up-crossing.
pub fn sea_state_to_load(state: &SeaState, config: &SimConfig) -> LoadPair {
    LoadPair {
        delta_s: config.load.kappa_mpa_per_m * state.hs,
        n_avg: 3600.0 / state.tz,
    }
}

/// Stress intensity factor range, MPa sqrt(mm), for crack length `a` in mm.
pub fn delta_k(a: f64, delta_s: f64, config: &SimConfig) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Input(format!("crack length must be >= 0, got {a}")));
    }
    Ok(delta_k_unchecked(a, delta_s, config))
}

#[inline]
pub(crate) fn delta_k_unchecked(a: f64, delta_s: f64, config: &SimConfig) -> f64 {
    let mut dk = config.geometry.y * delta_s * (std::f64::consts::PI * a).sqrt();
    if let Some(w) = config.geometry.finite_width_mm {
        dk *= (1.0 / (std::f64::consts::PI * a / w).cos()).sqrt();
    }
    dk
}
