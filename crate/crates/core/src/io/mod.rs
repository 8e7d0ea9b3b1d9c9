//! On-disk formats: trajectory and regression CSVs, model and report JSON,
//! ELBO traces and prediction bands. Every writer goes through
//! [`atomic_write`], so readers never observe half-written files.

mod dataset_file;
mod trajectories;

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub use dataset_file::{dataset_sidecar_path, read_dataset, write_dataset, DatasetSidecar};
pub use trajectories::{
    read_raw_trajectories, read_subsampled, write_raw_trajectories, write_subsampled, TrajectoryCsvWriter,
    TrajectoryGroup, TrajectoryGroups, TRAJECTORY_HEADER,
};

use crate::error::{Error, Result};
use crate::svgp::SvgpModel;
use crate::tasks::BandRow;

/// Formats `x` with `digits` significant digits, without an exponent for
/// moderate magnitudes.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (digits as i32 - 1 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.prec$e}", prec = digits - 1)
    }
}

/// Writes `path` through a temporary sibling file and a rename.
pub fn atomic_write<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        write(&mut w)?;
        let file = w.into_inner().map_err(|e| Error::io(&tmp, e.into_error()))?;
        file.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    atomic_write(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|source| Error::Json {
            context: path.display().to_string(),
            source,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

pub fn write_model(path: &Path, model: &SvgpModel) -> Result<()> {
    write_json(path, model)
}

pub fn read_model(path: &Path) -> Result<SvgpModel> {
    let model: SvgpModel = read_json(path)?;
    model.validate()?;
    Ok(model)
}

/// `iteration,elbo`, values written in shortest round-trip form.
pub fn write_elbo_trace(path: &Path, trace: &[f64]) -> Result<()> {
    atomic_write(path, |w| {
        let mut text = String::from("iteration,elbo\n");
        for (i, e) in trace.iter().enumerate() {
            text.push_str(&format!("{i},{e}\n"));
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

pub fn read_elbo_trace(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        context: path.display().to_string(),
        source,
    })?;
    rdr.deserialize::<(usize, f64)>()
        .map(|r| {
            r.map(|(_, e)| e).map_err(|source| Error::Csv {
                context: path.display().to_string(),
                source,
            })
        })
        .collect()
}

/// `t_years,mean_mm,lo95_mm,hi95_mm`.
pub fn write_band(path: &Path, rows: &[BandRow]) -> Result<()> {
    atomic_write(path, |w| {
        let mut text = String::from("t_years,mean_mm,lo95_mm,hi95_mm\n");
        for r in rows {
            text.push_str(&format!("{},{},{},{}\n", r.t_years, r.mean_mm, r.lo95_mm, r.hi95_mm));
        }
        w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    })
}

/// Path with `suffix` appended to the full file name.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}
