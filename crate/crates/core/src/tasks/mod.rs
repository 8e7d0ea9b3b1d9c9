//! The three monitoring tasks: training, evaluation and prior construction.
//!
//! * Task I conditions on time only (crack-length monitoring).
//! * Task II adds the Paris parameters `C, m`.
//! * Task III adds the measured initial crack length as well.

mod metrics;

use serde::{Deserialize, Serialize};

pub use metrics::{evaluate, nmse, trajectory_loglik, EvalReport, TrajectoryScore, VarianceRow};

use crate::dataset::{build_dataset, SubsampledTrajectory, Task};
use crate::error::{Error, Result};
use crate::points::Points;
use crate::sim::MaterialSample;
use crate::svgp::{train, SvgpModel, TrainConfig, TrainOutcome};

/// z-value of the two-sided 95% Gaussian interval.
pub const Z95: f64 = 1.959964;

/// Fixed values of the non-time inputs for a prior query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub c: Option<f64>,
    pub m: Option<f64>,
    pub alpha0: Option<f64>,
}

impl Conditioning {
    pub fn none() -> Self {
        Conditioning::default()
    }

    pub fn paris(c: f64, m: f64) -> Self {
        Conditioning { c: Some(c), m: Some(m), alpha0: None }
    }

    pub fn full(c: f64, m: f64, alpha0: f64) -> Self {
        Conditioning { c: Some(c), m: Some(m), alpha0: Some(alpha0) }
    }

    /// The variables of `material` that `task` conditions on.
    pub fn for_task(task: Task, material: &MaterialSample) -> Self {
        match task {
            Task::I => Conditioning::none(),
            Task::II => Conditioning::paris(material.c, material.m),
            Task::III => Conditioning::full(material.c, material.m, material.alpha0),
        }
    }

    /// Input vector for `task` at time `t`. Missing or superfluous
    /// conditioning variables are rejected.
    pub fn input(&self, task: Task, t: f64) -> Result<Vec<f64>> {
        let wants = match task {
            Task::I => [false, false, false],
            Task::II => [true, true, false],
            Task::III => [true, true, true],
        };
        let have = [self.c, self.m, self.alpha0];
        let names = ["c", "m", "alpha0"];
        let mut input = vec![t];
        for ((want, value), name) in wants.iter().zip(have).zip(names) {
            match (want, value) {
                (true, Some(v)) => input.push(v),
                (true, None) => {
                    return Err(Error::Input(format!("task {task} requires conditioning on {name}")))
                }
                (false, Some(_)) => {
                    return Err(Error::Input(format!("task {task} does not condition on {name}")))
                }
                (false, None) => {}
            }
        }
        Ok(input)
    }
}

/// Gaussian prior over crack length at one query input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPrior {
    pub task: Task,
    pub t_years: f64,
    pub conditioning: Conditioning,
    /// mm.
    pub mean: f64,
    /// mm.
    pub std: f64,
}

/// Builds the task dataset from subsampled training trajectories and trains
/// a surrogate on it.
pub fn train_task(train_trajs: &[SubsampledTrajectory], task: Task, config: &TrainConfig) -> Result<TrainOutcome> {
    if train_trajs.is_empty() {
        return Err(Error::Input("no training trajectories".into()));
    }
    train(&build_dataset(train_trajs, task), config)
}

/// Observation-space predictive distribution at `(t, conditioning)`.
pub fn prior_at(model: &SvgpModel, t: f64, conditioning: &Conditioning) -> Result<GaussianPrior> {
    let input = conditioning.input(model.task, t)?;
    let p = model.predict(&Points::from_rows(&[input])?)?[0];
    Ok(GaussianPrior {
        task: model.task,
        t_years: t,
        conditioning: *conditioning,
        mean: p.mean,
        std: p.obs_var.sqrt(),
    })
}

/// One row of a plotted prediction band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub t_years: f64,
    pub mean_mm: f64,
    pub lo95_mm: f64,
    pub hi95_mm: f64,
}

/// Predictive mean and 95% band on `n_points` equally spaced times in
/// `[0, t_max]`.
pub fn prediction_band(model: &SvgpModel, conditioning: &Conditioning, t_max: f64, n_points: usize) -> Result<Vec<BandRow>> {
    if n_points < 2 || !(t_max > 0.0) {
        return Err(Error::Input("band needs at least 2 points and t_max > 0".into()));
    }
    let times: Vec<f64> = (0..n_points).map(|i| t_max * i as f64 / (n_points - 1) as f64).collect();
    let rows = times
        .iter()
        .map(|&t| conditioning.input(model.task, t))
        .collect::<Result<Vec<_>>>()?;
    let preds = model.predict(&Points::from_rows(&rows)?)?;
    Ok(times
        .into_iter()
        .zip(preds)
        .map(|(t, p)| {
            let sd = p.obs_var.sqrt();
            BandRow {
                t_years: t,
                mean_mm: p.mean,
                lo95_mm: p.mean - Z95 * sd,
                hi95_mm: p.mean + Z95 * sd,
            }
        })
        .collect())
}
