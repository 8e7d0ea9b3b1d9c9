use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{build_dataset, grid_index, grid_time, SubsampledTrajectory, Task};
use crate::error::{Error, Result};
use crate::gp::GaussianPrediction;
use crate::stats::{mean, population_variance};
use crate::svgp::SvgpModel;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Normalized mean squared error on a 0-100 scale: 0 for a perfect fit,
/// 100 for predicting the mean of `y_true` everywhere.
///
/// `100 / (N var(y)) * sum (y - y_hat)^2` with the population variance.
pub fn nmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.is_empty() || y_true.len() != y_pred.len() {
        return Err(Error::Input(format!(
            "nmse needs equal non-zero lengths, got {} and {}",
            y_true.len(),
            y_pred.len()
        )));
    }
    let var = population_variance(y_true);
    if !(var > 0.0) {
        return Err(Error::Input("nmse is undefined for constant targets".into()));
    }
    let sse: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(100.0 * sse / (y_true.len() as f64 * var))
}

fn gaussian_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean) * (x - mean) / var)
}

fn sum_loglik(targets: &[f64], preds: &[GaussianPrediction]) -> f64 {
    targets
        .iter()
        .zip(preds)
        .map(|(a, p)| gaussian_logpdf(*a, p.mean, p.obs_var))
        .sum()
}

/// Sum over the trajectory's grid points of the log density of each
/// observed crack length under the independent observation-space predictive
/// marginals.
pub fn trajectory_loglik(model: &SvgpModel, traj: &SubsampledTrajectory) -> Result<f64> {
    let ds = build_dataset(std::slice::from_ref(traj), model.task);
    let preds = model.predict(&ds.inputs)?;
    Ok(sum_loglik(&ds.targets, &preds))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryScore {
    pub traj_id: u64,
    pub loglik: f64,
}

/// Predicted versus empirical spread of the test data at one grid time.
///
/// `predicted_var` is the variance of the mixture of the per-point
/// predictive distributions (mean observation variance plus the variance of
/// the predictive means); for task I every point shares one prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub t_years: f64,
    pub count: usize,
    pub empirical_var: f64,
    pub predicted_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    /// Pooled over every test point.
    pub nmse: f64,
    pub mean_loglik: f64,
    /// Sorted by trajectory id.
    pub per_trajectory: Vec<TrajectoryScore>,
    pub variance_diagnostic: Vec<VarianceRow>,
}

pub fn evaluate(model: &SvgpModel, test: &[SubsampledTrajectory]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Input("no test trajectories".into()));
    }
    let mut sorted: Vec<&SubsampledTrajectory> = test.iter().collect();
    sorted.sort_by_key(|t| t.id);
    let owned: Vec<SubsampledTrajectory> = sorted.into_iter().cloned().collect();
    let ds = build_dataset(&owned, model.task);
    let preds = model.predict(&ds.inputs)?;

    let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
    let score = nmse(&ds.targets, &means)?;

    let mut per_trajectory = Vec::with_capacity(owned.len());
    let mut start = 0;
    for t in &owned {
        let end = start + t.len();
        per_trajectory.push(TrajectoryScore {
            traj_id: t.id,
            loglik: sum_loglik(&ds.targets[start..end], &preds[start..end]),
        });
        start = end;
    }
    let mean_loglik = per_trajectory.iter().map(|s| s.loglik).sum::<f64>() / per_trajectory.len() as f64;

    // Group rows by grid time.
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (row, x) in ds.inputs.rows().enumerate() {
        if let Some(k) = grid_index(x[0]) {
            groups.entry(k).or_default().push(row);
        }
    }
    let variance_diagnostic = groups
        .into_iter()
        .filter(|(_, rows)| rows.len() >= 2)
        .map(|(k, rows)| {
            let targets: Vec<f64> = rows.iter().map(|&r| ds.targets[r]).collect();
            let pred_means: Vec<f64> = rows.iter().map(|&r| preds[r].mean).collect();
            let pred_vars: Vec<f64> = rows.iter().map(|&r| preds[r].obs_var).collect();
            VarianceRow {
                t_years: grid_time(k),
                count: rows.len(),
                empirical_var: population_variance(&targets),
                predicted_var: mean(&pred_vars) + population_variance(&pred_means),
            }
        })
        .collect();

    Ok(EvalReport {
        task: model.task,
        nmse: score,
        mean_loglik,
        per_trajectory,
        variance_diagnostic,
    })
}
