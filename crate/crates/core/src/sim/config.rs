use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and standard deviation of a normal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalParams {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

/// One cell of a sea-state scatter diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterCell {
    /// Significant wave height, m.
    pub hs_m: f64,
    /// Zero up-crossing period, s.
    pub tz_s: f64,
    /// Relative occurrence; the table is normalized on use.
    pub probability: f64,
}

/// Sea-state occurrence model and linear wave-to-stress transfer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadModel {
    /// Stress range per metre of significant wave height, MPa/m.
    pub kappa_mpa_per_m: f64,
    pub scatter: Vec<ScatterCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Geometry factor applied to the infinite-plate stress intensity.
    pub y: f64,
    /// Plate width, mm. When set, the secant finite-width correction
    /// `sqrt(sec(pi a / W))` multiplies the stress intensity.
    pub finite_width_mm: Option<f64>,
}

/// Everything needed to generate a crack-growth ensemble.
///
/// Parsed from JSON with every field required; the shipped defaults live in
/// `configs/sim_default.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    /// Critical crack length, mm.
    pub alpha_cr_mm: f64,
    pub horizon_years: f64,
    /// Normal distribution of ln C, with C in (mm/cycle)/(MPa sqrt(mm))^m.
    pub ln_c: NormalParams,
    /// Normal distribution of the Paris exponent m.
    pub m: NormalParams,
    /// Normal distribution of the initial crack length, mm, truncated to
    /// (0, alpha_cr).
    pub alpha0_mm: NormalParams,
    pub duration_hours: Bounds,
    pub load: LoadModel,
    pub geometry: Geometry,
    /// Largest allowed single-step growth relative to the current length
    /// before a sea state is split into sub-steps.
    pub max_step_fraction: f64,
}

impl SimConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = serde_json::from_str(s).map_err(|source| Error::Json {
            context: "simulation config".into(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        let finite_normal = |p: &NormalParams| p.mean.is_finite() && p.std.is_finite() && p.std >= 0.0;
        check(self.n_trajectories >= 1, "n_trajectories must be >= 1")?;
        check(
            self.alpha_cr_mm.is_finite() && self.alpha_cr_mm > 0.0,
            "alpha_cr_mm must be positive",
        )?;
        check(
            self.horizon_years.is_finite() && self.horizon_years > 0.0,
            "horizon_years must be positive",
        )?;
        check(finite_normal(&self.ln_c), "ln_c must have finite mean and std >= 0")?;
        check(finite_normal(&self.m), "m must have finite mean and std >= 0")?;
        check(
            finite_normal(&self.alpha0_mm),
            "alpha0_mm must have finite mean and std >= 0",
        )?;
        check(
            self.alpha0_mm.mean > 0.0 && self.alpha0_mm.mean < self.alpha_cr_mm,
            "alpha0_mm.mean must lie in (0, alpha_cr_mm)",
        )?;
        let d = &self.duration_hours;
        check(
            d.min.is_finite() && d.max.is_finite() && d.min > 0.0 && d.min <= d.max,
            "duration_hours must satisfy 0 < min <= max",
        )?;
        check(
            self.load.kappa_mpa_per_m.is_finite() && self.load.kappa_mpa_per_m >= 0.0,
            "load.kappa_mpa_per_m must be >= 0",
        )?;
        check(!self.load.scatter.is_empty(), "load.scatter must not be empty")?;
        for cell in &self.load.scatter {
            check(
                cell.hs_m.is_finite() && cell.hs_m > 0.0 && cell.tz_s.is_finite() && cell.tz_s > 0.0,
                "scatter cells need hs_m > 0 and tz_s > 0",
            )?;
            check(
                cell.probability.is_finite() && cell.probability >= 0.0,
                "scatter probabilities must be >= 0",
            )?;
        }
        check(
            self.load.scatter.iter().map(|c| c.probability).sum::<f64>() > 0.0,
            "scatter probabilities must not all be zero",
        )?;
        check(
            self.geometry.y.is_finite() && self.geometry.y > 0.0,
            "geometry.y must be positive",
        )?;
        if let Some(w) = self.geometry.finite_width_mm {
            check(
                w.is_finite() && w > 2.0 * self.alpha_cr_mm,
                "geometry.finite_width_mm must exceed 2 * alpha_cr_mm",
            )?;
        }
        check(
            self.max_step_fraction.is_finite() && self.max_step_fraction > 0.0,
            "max_step_fraction must be positive",
        )?;
        Ok(())
    }

    pub fn horizon_hours(&self) -> f64 {
        self.horizon_years * super::HOURS_PER_YEAR
    }
}

#[cfg(test)]
pub(crate) fn test_config() -> SimConfig {
    SimConfig::from_json_str(include_str!("../../../../configs/sim_default.json")).unwrap()
}
