//! `traj_id,c,m,alpha0,t_years,a_mm,truncated`, one row per recorded point.
//! Raw and subsampled trajectories share the schema.

use std::io::Write;
use std::path::Path;

use super::{atomic_write, fmt_sig};
use crate::dataset::SubsampledTrajectory;
use crate::error::{Error, Result};
use crate::sim::{MaterialSample, Termination, Trajectory};

pub const TRAJECTORY_HEADER: &str = "traj_id,c,m,alpha0,t_years,a_mm,truncated";
const DIGITS: usize = 9;

/// Streaming writer; callers emit trajectories in any grouping they like.
pub struct TrajectoryCsvWriter<'w> {
    out: &'w mut dyn Write,
    buf: String,
}

impl<'w> TrajectoryCsvWriter<'w> {
    pub fn new(out: &'w mut dyn Write) -> Result<Self> {
        writeln!(out, "{TRAJECTORY_HEADER}").map_err(|e| Error::io("trajectory csv", e))?;
        Ok(TrajectoryCsvWriter { out, buf: String::new() })
    }

    fn write_points(&mut self, id: u64, material: &MaterialSample, truncated: bool, times: &[f64], lengths: &[f64]) -> Result<()> {
        let prefix = format!(
            "{id},{},{},{},",
            fmt_sig(material.c, DIGITS),
            fmt_sig(material.m, DIGITS),
            fmt_sig(material.alpha0, DIGITS)
        );
        self.buf.clear();
        for (t, a) in times.iter().zip(lengths) {
            self.buf.push_str(&prefix);
            self.buf.push_str(&fmt_sig(*t, DIGITS));
            self.buf.push(',');
            self.buf.push_str(&fmt_sig(*a, DIGITS));
            self.buf.push_str(if truncated { ",true\n" } else { ",false\n" });
        }
        self.out
            .write_all(self.buf.as_bytes())
            .map_err(|e| Error::io("trajectory csv", e))
    }

    pub fn write(&mut self, traj: &Trajectory) -> Result<()> {
        self.write_points(traj.id, &traj.material, traj.truncated_at_critical(), &traj.times, &traj.lengths)
    }

    pub fn write_subsampled(&mut self, traj: &SubsampledTrajectory) -> Result<()> {
        self.write_points(traj.id, &traj.material, traj.truncated_at_critical, &traj.grid_times, &traj.lengths)
    }
}

pub fn write_raw_trajectories(path: &Path, trajs: &[Trajectory]) -> Result<()> {
    atomic_write(path, |w| {
        let mut writer = TrajectoryCsvWriter::new(w)?;
        trajs.iter().try_for_each(|t| writer.write(t))
    })
}

pub fn write_subsampled(path: &Path, trajs: &[SubsampledTrajectory]) -> Result<()> {
    atomic_write(path, |w| {
        let mut writer = TrajectoryCsvWriter::new(w)?;
        trajs.iter().try_for_each(|t| writer.write_subsampled(t))
    })
}

/// All rows of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryGroup {
    pub id: u64,
    pub material: MaterialSample,
    pub truncated: bool,
    pub times: Vec<f64>,
    pub lengths: Vec<f64>,
}

impl TrajectoryGroup {
    /// A raw trajectory. The file does not distinguish overflow from
    /// critical-length truncation; both come back as `Critical`.
    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            id: self.id,
            material: self.material,
            times: self.times,
            lengths: self.lengths,
            termination: if self.truncated { Termination::Critical } else { Termination::Horizon },
        }
    }

    pub fn into_subsampled(self) -> SubsampledTrajectory {
        SubsampledTrajectory {
            id: self.id,
            material: self.material,
            grid_times: self.times,
            lengths: self.lengths,
            truncated_at_critical: self.truncated,
        }
    }
}

type Row = (u64, f64, f64, f64, f64, f64, bool);

/// Iterator over consecutive row groups sharing a `traj_id`.
pub struct TrajectoryGroups {
    rows: csv::DeserializeRecordsIntoIter<std::fs::File, Row>,
    pending: Option<Row>,
    context: String,
}

impl TrajectoryGroups {
    pub fn open(path: &Path) -> Result<Self> {
        let context = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv { context: context.clone(), source })?;
        let header = rdr
            .headers()
            .map_err(|source| Error::Csv { context: context.clone(), source })?
            .iter()
            .collect::<Vec<_>>()
            .join(",");
        if header != TRAJECTORY_HEADER {
            return Err(Error::Format {
                what: "trajectory file",
                detail: format!("{context}: header {header:?}, expected {TRAJECTORY_HEADER:?}"),
            });
        }
        Ok(TrajectoryGroups { rows: rdr.into_deserialize(), pending: None, context })
    }

    fn next_row(&mut self) -> Option<Result<Row>> {
        if let Some(r) = self.pending.take() {
            return Some(Ok(r));
        }
        self.rows.next().map(|r| {
            r.map_err(|source| Error::Csv {
                context: self.context.clone(),
                source,
            })
        })
    }
}

impl Iterator for TrajectoryGroups {
    type Item = Result<TrajectoryGroup>;

    fn next(&mut self) -> Option<Self::Item> {
        let first = match self.next_row()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        let (id, c, m, alpha0, t, a, truncated) = first;
        let mut group = TrajectoryGroup {
            id,
            material: MaterialSample { c, m, alpha0 },
            truncated,
            times: vec![t],
            lengths: vec![a],
        };
        loop {
            match self.next_row() {
                None => break,
                Some(Err(e)) => return Some(Err(e)),
                Some(Ok(row)) if row.0 == id => {
                    if row.4 <= *group.times.last().unwrap() {
                        return Some(Err(Error::Format {
                            what: "trajectory file",
                            detail: format!("{}: times of trajectory {id} are not increasing", self.context),
                        }));
                    }
                    group.times.push(row.4);
                    group.lengths.push(row.5);
                }
                Some(Ok(row)) => {
                    self.pending = Some(row);
                    break;
                }
            }
        }
        Some(Ok(group))
    }
}

pub fn read_raw_trajectories(path: &Path) -> Result<Vec<Trajectory>> {
    TrajectoryGroups::open(path)?
        .map(|g| g.map(TrajectoryGroup::into_trajectory))
        .collect()
}

pub fn read_subsampled(path: &Path) -> Result<Vec<SubsampledTrajectory>> {
    TrajectoryGroups::open(path)?
        .map(|g| g.map(TrajectoryGroup::into_subsampled))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::subsample;

    fn traj(id: u64) -> Trajectory {
        Trajectory {
            id,
            material: MaterialSample { c: 6.9123456789e-14, m: 3.0123456789, alpha0: 30.5 },
            times: vec![0.0, 0.1, 0.2, 1.0 / 3.0],
            lengths: vec![30.5, 31.0, 31.25, 155.0],
            termination: Termination::Critical,
        }
    }

    #[test]
    fn raw_roundtrip_at_nine_digits() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        write_raw_trajectories(&p, &[traj(0), traj(5)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("traj_id,c,m,alpha0,t_years,a_mm,truncated\n0,"));
        assert!(text.contains(",0.333333333,155,true\n"));
        let back = read_raw_trajectories(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].id, 5);
        assert_eq!(back[0].material.c, 6.91234568e-14);
        assert_eq!(back[0].lengths, traj(0).lengths);
        assert!(back[0].truncated_at_critical());
    }

    #[test]
    fn subsampled_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = subsample(&traj(2));
        write_subsampled(&p, &[s.clone()]).unwrap();
        let back = read_subsampled(&p).unwrap();
        assert_eq!(back[0].lengths, s.lengths);
        assert_eq!(back[0].grid_times.len(), s.grid_times.len());
        // Re-writing what was read gives the same bytes.
        let p2 = dir.path().join("s2.csv");
        write_subsampled(&p2, &back).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "id,t\n1,2\n").unwrap();
        assert!(matches!(TrajectoryGroups::open(&p), Err(Error::Format { .. })));
    }
}
