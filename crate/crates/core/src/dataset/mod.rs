//! From raw trajectories to regression rows.
//!
//! Raw trajectories are reduced to a common bimonthly grid by
//! zero-order-hold (predecessor) sampling, summarized over the trajectories
//! still alive at each grid time, split by trajectory, and flattened into
//! `(input, crack length)` rows for one of the three task parametrizations.

mod split;
mod stats;
mod subsample;

use serde::{Deserialize, Serialize};

pub use split::holdout_split;
pub use stats::{empirical_stats, ProcessStats};
pub use subsample::{grid_index, grid_time, interpolate_at, subsample, SubsampledTrajectory, GRID_PER_YEAR};

use crate::error::{Error, Result};
use crate::points::Points;
use crate::sim::MaterialSample;

/// Which variables the surrogate conditions on besides time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    /// `[t]`: crack-length monitoring, every other source of uncertainty latent.
    I,
    /// `[t, C, m]`: crack-growth monitoring.
    II,
    /// `[t, C, m, alpha0]`: crack-growth monitoring with a measured initial crack.
    III,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::I, Task::II, Task::III];

    pub fn input_dim(self) -> usize {
        match self {
            Task::I => 1,
            Task::II => 3,
            Task::III => 4,
        }
    }

    /// Input column names in file order, excluding the target.
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Task::I => &["t_years"],
            Task::II => &["t_years", "c", "m"],
            Task::III => &["t_years", "c", "m", "alpha0"],
        }
    }

    pub fn input(self, t: f64, material: &MaterialSample) -> Vec<f64> {
        match self {
            Task::I => vec![t],
            Task::II => vec![t, material.c, material.m],
            Task::III => vec![t, material.c, material.m, material.alpha0],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::I => "I",
            Task::II => "II",
            Task::III => "III",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" => Ok(Task::I),
            "II" | "2" => Ok(Task::II),
            "III" | "3" => Ok(Task::III),
            other => Err(Error::Input(format!("unknown task {other:?}, expected I, II or III"))),
        }
    }
}

/// Point-wise regression data for one task, with trajectory provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub task: Task,
    pub inputs: Points,
    /// Crack lengths, mm.
    pub targets: Vec<f64>,
    pub traj_ids: Vec<u64>,
}

impl RegressionDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Flattens every grid point of every trajectory into one row.
pub fn build_dataset(trajs: &[SubsampledTrajectory], task: Task) -> RegressionDataset {
    let rows: usize = trajs.iter().map(|t| t.len()).sum();
    let mut data = Vec::with_capacity(rows * task.input_dim());
    let mut targets = Vec::with_capacity(rows);
    let mut traj_ids = Vec::with_capacity(rows);
    for traj in trajs {
        for (&t, &a) in traj.grid_times.iter().zip(&traj.lengths) {
            data.extend(task.input(t, &traj.material));
            targets.push(a);
            traj_ids.push(traj.id);
        }
    }
    RegressionDataset {
        task,
        inputs: Points::new(task.input_dim(), data).expect("row width matches task"),
        targets,
        traj_ids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: u64, n: usize) -> SubsampledTrajectory {
        SubsampledTrajectory {
            id,
            material: MaterialSample { c: 1e-13, m: 3.1, alpha0: 30.0 + id as f64 },
            grid_times: (0..n).map(grid_time).collect(),
            lengths: (0..n).map(|k| 30.0 + id as f64 + k as f64).collect(),
            truncated_at_critical: n < 19,
        }
    }

    #[test]
    fn task_one_rows() {
        let ds = build_dataset(&[traj(0, 19)], Task::I);
        assert_eq!(ds.len(), 19);
        assert_eq!(ds.inputs.dim(), 1);
        assert_eq!(ds.inputs.row(6), &[1.0]);
        assert_eq!(ds.targets[6], 36.0);
    }

    #[test]
    fn task_three_rows_carry_constants() {
        let trajs = [traj(0, 19), traj(3, 9)];
        let ds = build_dataset(&trajs, Task::III);
        assert_eq!(ds.len(), 28);
        for (row, &id) in ds.inputs.rows().zip(&ds.traj_ids) {
            let src = &trajs.iter().find(|t| t.id == id).unwrap().material;
            assert_eq!(&row[1..], &[src.c, src.m, src.alpha0]);
        }
        let ds2 = build_dataset(&trajs, Task::II);
        assert_eq!(ds2.inputs.dim(), 3);
        assert_eq!(ds2.targets, ds.targets);
    }

    #[test]
    fn task_parsing() {
        assert_eq!("II".parse::<Task>().unwrap(), Task::II);
        assert_eq!("3".parse::<Task>().unwrap(), Task::III);
        assert!("IV".parse::<Task>().is_err());
        assert_eq!(Task::III.to_string(), "III");
    }
}
