use crate::sim::{MaterialSample, Trajectory};

/// Grid points per year (bimonthly).
pub const GRID_PER_YEAR: f64 = 6.0;

// Half a minute, in years; absorbs rounding in accumulated sea-state times.
const TIME_TOL: f64 = 1e-9;

pub fn grid_time(k: usize) -> f64 {
    k as f64 / GRID_PER_YEAR
}

/// Grid index of time `t` if `t` lies on the grid.
pub fn grid_index(t: f64) -> Option<usize> {
    let k = (t * GRID_PER_YEAR).round();
    (k >= 0.0 && (t * GRID_PER_YEAR - k).abs() < 1e-6).then_some(k as usize)
}

/// A trajectory observed on the bimonthly grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampledTrajectory {
    pub id: u64,
    pub material: MaterialSample,
    /// Years, `k / 6` for `k = 0, 1, ...`.
    pub grid_times: Vec<f64>,
    /// mm.
    pub lengths: Vec<f64>,
    pub truncated_at_critical: bool,
}

impl SubsampledTrajectory {
    pub fn len(&self) -> usize {
        self.grid_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid_times.is_empty()
    }
}

/// Predecessor sampling: the crack length at each grid time is the last
/// recorded value at or before it. Grid times past the trajectory's final
/// time are dropped.
pub fn subsample(traj: &Trajectory) -> SubsampledTrajectory {
    let end = traj.final_time();
    let mut grid_times = Vec::new();
    let mut lengths = Vec::new();
    let mut j = 0;
    let mut k = 0;
    loop {
        let g = grid_time(k);
        if g > end + TIME_TOL {
            break;
        }
        while j + 1 < traj.times.len() && traj.times[j + 1] <= g + TIME_TOL {
            j += 1;
        }
        grid_times.push(g);
        lengths.push(traj.lengths[j]);
        k += 1;
    }
    SubsampledTrajectory {
        id: traj.id,
        material: traj.material,
        grid_times,
        lengths,
        truncated_at_critical: traj.truncated_at_critical(),
    }
}

/// Linearly interpolated crack length at time `t`, or `None` past the end of
/// the trajectory. Used for full-resolution ensemble statistics.
pub fn interpolate_at(traj: &Trajectory, t: f64) -> Option<f64> {
    let times = &traj.times;
    if t > traj.final_time() + TIME_TOL || t < 0.0 {
        return None;
    }
    let i = times.partition_point(|&x| x <= t);
    if i >= times.len() {
        return traj.lengths.last().copied();
    }
    if i == 0 {
        return Some(traj.lengths[0]);
    }
    let (t0, t1) = (times[i - 1], times[i]);
    let (a0, a1) = (traj.lengths[i - 1], traj.lengths[i]);
    Some(a0 + (a1 - a0) * (t - t0) / (t1 - t0))
}
