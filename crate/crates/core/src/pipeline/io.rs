//! File formats: trajectory CSV with a JSON sidecar, signature tables as JSON
//! lines, and SHA-256 digests for the manifest.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::signatures::SignatureRecord;
use crate::systems::{SystemSpec, TimeSeries};

pub const TRAJECTORY_FORMAT: u32 = 1;

/// Sidecar of a trajectory file: everything needed to lift it again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub format: u32,
    pub spec: SystemSpec,
    /// Noise seed; absent for deterministic systems.
    pub seed: Option<u64>,
    pub points: usize,
    pub burn_in: usize,
    /// Integrator step and thinning of stochastic runs.
    pub dt: Option<f64>,
    pub thin: Option<usize>,
    pub columns: Vec<String>,
}

/// `trajectory.csv` -> `trajectory.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

/// Write `t, x1..xd` rows and the sidecar next to them.
pub fn write_trajectory(path: &Path, series: &TimeSeries, meta: &TrajectoryMeta) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", meta.columns.join(","))?;
    for i in 0..series.len() {
        write!(w, "{}", series.times[i])?;
        for x in series.point(i) {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    fs::write(meta_path(path), serde_json::to_string_pretty(meta)? + "\n")?;
    Ok(())
}

pub fn trajectory_columns(dim: usize) -> Vec<String> {
    std::iter::once("t".to_string()).chain((1..=dim).map(|i| format!("x{i}"))).collect()
}

pub fn read_trajectory(path: &Path) -> Result<(TimeSeries, TrajectoryMeta)> {
    let meta: TrajectoryMeta = serde_json::from_str(&fs::read_to_string(meta_path(path))?)?;
    if meta.format != TRAJECTORY_FORMAT {
        return Err(Error::Parse(format!("unsupported trajectory format {}", meta.format)));
    }
    meta.spec.validate()?;
    let d = meta.spec.dim();
    let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let headers = rd.headers().map_err(|e| Error::Parse(e.to_string()))?;
    if headers.len() != d + 1 {
        return Err(Error::DimensionMismatch { expected: d + 1, found: headers.len() });
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let mut vals = rec.iter().map(|f| {
            f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: '{f}': {e}", row + 1)))
        });
        times.push(vals.next().transpose()?.unwrap_or(f64::NAN));
        for v in vals {
            states.push(v?);
        }
    }
    if states.len() != times.len() * d {
        return Err(Error::Parse("ragged trajectory file".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Parse("trajectory times must be strictly increasing".into()));
    }
    let series = TimeSeries { dim: d, states, times, spec: meta.spec.clone(), seed: meta.seed };
    Ok((series, meta))
}

pub fn write_records(path: &Path, records: &[SignatureRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<SignatureRecord>> {
    let rd = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in rd.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{BitVec, Gf2Subspace};
    use crate::systems::integrate_ode;

    #[test]
    fn trajectory_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let spec = SystemSpec::lorenz();
        let series = integrate_ode(&spec, 50).unwrap();
        let meta = TrajectoryMeta {
            format: TRAJECTORY_FORMAT,
            spec: spec.clone(),
            seed: None,
            points: 50,
            burn_in: 0,
            dt: None,
            thin: None,
            columns: trajectory_columns(3),
        };
        write_trajectory(&path, &series, &meta).unwrap();
        assert!(dir.path().join("traj.meta.json").exists());
        let (back, m) = read_trajectory(&path).unwrap();
        assert_eq!(m, meta);
        assert_eq!(back.states, series.states);
        assert_eq!(back.times, series.times);
    }

    #[test]
    fn malformed_trajectory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let series = integrate_ode(&SystemSpec::lorenz(), 5).unwrap();
        let meta = TrajectoryMeta {
            format: TRAJECTORY_FORMAT,
            spec: SystemSpec::lorenz(),
            seed: None,
            points: 5,
            burn_in: 0,
            dt: None,
            thin: None,
            columns: trajectory_columns(3),
        };
        write_trajectory(&path, &series, &meta).unwrap();
        fs::write(&path, "t,x1,x2,x3\n0,1,2,3\n0,1,2,3\n").unwrap();
        assert!(read_trajectory(&path).is_err());
        fs::write(&path, "t,x1,x2\n0,1,2\n").unwrap();
        assert!(read_trajectory(&path).is_err());
    }

    #[test]
    fn records_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.jsonl");
        let s = Gf2Subspace::span(3, &[BitVec::from_bools(&[true, false, true])]).unwrap();
        let recs = vec![
            SignatureRecord { start: 3, length: 10, radius: 0.5, signature: s },
            SignatureRecord { start: 0, length: 20, radius: 0.5, signature: Gf2Subspace::zero(3) },
        ];
        write_records(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
    }

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
