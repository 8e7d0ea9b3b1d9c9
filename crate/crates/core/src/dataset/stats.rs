use super::subsample::{grid_time, SubsampledTrajectory};
use crate::error::{Error, Result};
use crate::stats::{mean, quantile_sorted};

/// Survivor statistics of an ensemble on the bimonthly grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessStats {
    pub grid_times: Vec<f64>,
    pub mean: Vec<f64>,
    /// 2.5th percentile, mm.
    pub lower95: Vec<f64>,
    /// 97.5th percentile, mm.
    pub upper95: Vec<f64>,
    /// Trajectories alive at each grid time.
    pub counts: Vec<usize>,
}

impl ProcessStats {
    /// Statistics from per-grid-index value columns. Grid indices with fewer
    /// than `min_survivors` values are omitted.
    pub fn from_columns(columns: Vec<Vec<f64>>, min_survivors: usize) -> ProcessStats {
        let mut out = ProcessStats {
            grid_times: Vec::new(),
            mean: Vec::new(),
            lower95: Vec::new(),
            upper95: Vec::new(),
            counts: Vec::new(),
        };
        for (k, mut values) in columns.into_iter().enumerate() {
            if values.len() < min_survivors.max(1) {
                continue;
            }
            values.sort_by(f64::total_cmp);
            out.grid_times.push(grid_time(k));
            out.mean.push(mean(&values));
            out.lower95.push(quantile_sorted(&values, 0.025));
            out.upper95.push(quantile_sorted(&values, 0.975));
            out.counts.push(values.len());
        }
        out
    }

    pub fn from_subsampled(trajs: &[SubsampledTrajectory], min_survivors: usize) -> ProcessStats {
        ProcessStats::from_columns(grid_columns(trajs), min_survivors)
    }

    pub fn interval_width(&self) -> Vec<f64> {
        self.upper95.iter().zip(&self.lower95).map(|(u, l)| u - l).collect()
    }
}

/// Values at each grid index across the trajectories alive there.
pub(crate) fn grid_columns(trajs: &[SubsampledTrajectory]) -> Vec<Vec<f64>> {
    let n_grid = trajs.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut columns = vec![Vec::new(); n_grid];
    for t in trajs {
        for (k, &a) in t.lengths.iter().enumerate() {
            columns[k].push(a);
        }
    }
    columns
}

/// Mean and 95% empirical band per grid time over the surviving
/// trajectories; grid times with fewer than two survivors are omitted.
pub fn empirical_stats(trajs: &[SubsampledTrajectory]) -> Result<ProcessStats> {
    if trajs.is_empty() {
        return Err(Error::Input("empirical statistics need at least one trajectory".into()));
    }
    Ok(ProcessStats::from_subsampled(trajs, 2))
}
