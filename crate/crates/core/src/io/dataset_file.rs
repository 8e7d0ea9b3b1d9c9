//! `traj_id,t_years[,c][,m][,alpha0],a_mm` with a JSON sidecar recording the
//! task, row count and source checksum. Values use shortest round-trip
//! formatting, so reading a written dataset reproduces it bit for bit.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{atomic_write, read_json, with_suffix, write_json};
use crate::dataset::{RegressionDataset, Task};
use crate::error::{Error, Result};
use crate::points::Points;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub task: Task,
    pub rows: usize,
    /// SHA-256 of the trajectory file the rows were built from.
    pub source_sha256: String,
}

pub fn dataset_sidecar_path(path: &Path) -> PathBuf {
    with_suffix(path, ".meta.json")
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_exact(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn header(task: Task) -> String {
    let mut cols = vec!["traj_id"];
    cols.extend_from_slice(task.columns());
    cols.push("a_mm");
    cols.join(",")
}

pub fn write_dataset(path: &Path, ds: &RegressionDataset, source_sha256: &str) -> Result<()> {
    atomic_write(path, |w| {
        let mut text = header(ds.task);
        text.push('\n');
        for ((row, target), id) in ds.inputs.rows().zip(&ds.targets).zip(&ds.traj_ids) {
            text.push_str(&id.to_string());
            for v in row {
                text.push(',');
                text.push_str(&fmt_exact(*v));
            }
            text.push(',');
            text.push_str(&fmt_exact(*target));
            text.push('\n');
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })?;
    write_json(
        &dataset_sidecar_path(path),
        &DatasetSidecar {
            task: ds.task,
            rows: ds.len(),
            source_sha256: source_sha256.to_string(),
        },
    )
}

pub fn read_dataset(path: &Path) -> Result<(RegressionDataset, DatasetSidecar)> {
    let sidecar: DatasetSidecar = read_json(&dataset_sidecar_path(path))?;
    let task = sidecar.task;
    let context = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv { context: context.clone(), source })?;
    let found = rdr
        .headers()
        .map_err(|source| Error::Csv { context: context.clone(), source })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if found != header(task) {
        return Err(Error::Format {
            what: "dataset file",
            detail: format!("{context}: header {found:?} does not match task {task}"),
        });
    }
    let dim = task.input_dim();
    let mut inputs = Points::empty(dim);
    let mut targets = Vec::new();
    let mut traj_ids = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| Error::Csv { context: context.clone(), source })?;
        let parse = |i: usize| -> Result<f64> {
            record[i].parse().map_err(|_| Error::Format {
                what: "dataset file",
                detail: format!("{context}: bad number {:?}", &record[i]),
            })
        };
        traj_ids.push(record[0].parse().map_err(|_| Error::Format {
            what: "dataset file",
            detail: format!("{context}: bad traj_id {:?}", &record[0]),
        })?);
        let row = (1..=dim).map(parse).collect::<Result<Vec<_>>>()?;
        inputs.push(&row)?;
        targets.push(parse(dim + 1)?);
    }
    if targets.len() != sidecar.rows {
        return Err(Error::Format {
            what: "dataset file",
            detail: format!("{context}: {} rows, sidecar says {}", targets.len(), sidecar.rows),
        });
    }
    Ok((RegressionDataset { task, inputs, targets, traj_ids }, sidecar))
}
