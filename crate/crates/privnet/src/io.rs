//! On-disk formats.
//!
//! A network sequence is a directory with a `manifest.toml` (horizon, shape,
//! symmetry, entry domain) and one gzip-compressed dense CSV per time step
//! (`t00001.csv.gz`, ...). A model specification is a TOML file with keys
//! `T`, `n1`, `n2`, `symmetric`, `dependence`, `change_points`, and one
//! `[[segment]]` per mean matrix holding either a scalar `theta` (constant
//! matrix) or a `theta_csv` path to a dense CSV, relative to the spec file.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgen::{Dependence, Domain, ModelSpec, NetworkSequence, ProbMatrix};
use crate::scalar::{from_f64, to_f64, Scalar};

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    horizon: usize,
    n1: usize,
    n2: usize,
    symmetric: bool,
    domain: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    magnitude: Option<f64>,
}

fn frame_file(t: usize) -> String {
    format!("t{t:05}.csv.gz")
}

fn matrix_to_csv<S: Scalar>(m: &Array2<S>) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&v| format!("{}", to_f64(v))).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn matrix_from_csv<S: Scalar>(text: &str, what: &str) -> Result<Array2<S>> {
    let mut rows: Vec<Vec<S>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<S>, _> = line
            .split(',')
            .map(|cell| cell.trim().parse::<f64>().map(from_f64::<S>))
            .collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(Error::InvalidParameter(format!(
                    "{what}: line {}: {e}",
                    ln + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!("{what}: empty matrix")));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidParameter(format!(
            "{what}: ragged rows in matrix"
        )));
    }
    let nrows = rows.len();
    Array2::from_shape_vec((nrows, cols), rows.into_iter().flatten().collect())
        .map_err(|e| Error::InvalidParameter(format!("{what}: {e}")))
}

/// Writes a sequence directory (manifest plus one `csv.gz` per time step).
pub fn write_sequence<S: Scalar>(dir: &Path, seq: &NetworkSequence<S>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let (domain, magnitude) = match seq.domain() {
        Domain::Binary01 => ("binary01", None),
        Domain::PlusMinus { magnitude } => ("plus_minus_b", Some(magnitude)),
        Domain::Real => ("real", None),
    };
    let manifest = Manifest {
        horizon: seq.horizon(),
        n1: seq.n1(),
        n2: seq.n2(),
        symmetric: seq.is_symmetric(),
        domain: domain.to_string(),
        magnitude,
    };
    let manifest_path = dir.join("manifest.toml");
    let text = toml::to_string(&manifest)
        .map_err(|e| Error::InvalidParameter(format!("manifest serialization: {e}")))?;
    fs::write(&manifest_path, text)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;

    for t in 1..=seq.horizon() {
        let path = dir.join(frame_file(t));
        let file = fs::File::create(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut enc = GzEncoder::new(file, Compression::default());
        enc.write_all(matrix_to_csv(seq.frame(t)).as_bytes())
            .and_then(|_| enc.finish().map(|_| ()))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
    }
    Ok(())
}

/// Reads a sequence directory written by [`write_sequence`].
pub fn read_sequence<S: Scalar>(dir: &Path) -> Result<NetworkSequence<S>> {
    let manifest_path = dir.join("manifest.toml");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::io(manifest_path.display().to_string(), e))?;
    let manifest: Manifest = toml::from_str(&text).map_err(|e| Error::Config {
        key: "manifest".into(),
        message: e.to_string(),
    })?;
    let domain = match manifest.domain.as_str() {
        "binary01" => Domain::Binary01,
        "plus_minus_b" => Domain::PlusMinus {
            magnitude: manifest.magnitude.ok_or_else(|| Error::Config {
                key: "manifest.magnitude".into(),
                message: "required for domain plus_minus_b".into(),
            })?,
        },
        "real" => Domain::Real,
        other => {
            return Err(Error::Config {
                key: "manifest.domain".into(),
                message: format!("unknown domain `{other}`"),
            })
        }
    };
    let mut frames = Vec::with_capacity(manifest.horizon);
    for t in 1..=manifest.horizon {
        let path = dir.join(frame_file(t));
        let file = fs::File::open(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut text = String::new();
        GzDecoder::new(file)
            .read_to_string(&mut text)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let m: Array2<S> = matrix_from_csv(&text, &path.display().to_string())?;
        if m.dim() != (manifest.n1, manifest.n2) {
            return Err(Error::ShapeMismatch(format!(
                "{}: frame is {:?}, manifest says {}x{}",
                path.display(),
                m.dim(),
                manifest.n1,
                manifest.n2
            )));
        }
        frames.push(m);
    }
    NetworkSequence::new(frames, domain, manifest.symmetric)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    #[serde(rename = "T")]
    horizon: usize,
    n1: usize,
    n2: usize,
    symmetric: bool,
    dependence: Dependence,
    #[serde(default)]
    change_points: Vec<usize>,
    segment: Vec<SegmentFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_csv: Option<String>,
}

/// Reads a model specification from TOML. Matrix CSV paths are resolved
/// relative to the spec file's directory.
pub fn read_model_spec<S: Scalar>(path: &Path) -> Result<ModelSpec<S>> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let file: SpecFile = toml::from_str(&text).map_err(|e| Error::Config {
        key: "model spec".into(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut thetas = Vec::with_capacity(file.segment.len());
    for (k, seg) in file.segment.iter().enumerate() {
        let values = match (seg.theta, &seg.theta_csv) {
            (Some(p), None) => Array2::from_elem((file.n1, file.n2), from_f64::<S>(p)),
            (None, Some(rel)) => {
                let mpath = base.join(rel);
                let text = fs::read_to_string(&mpath)
                    .map_err(|e| Error::io(mpath.display().to_string(), e))?;
                matrix_from_csv(&text, &mpath.display().to_string())?
            }
            _ => {
                return Err(Error::Config {
                    key: format!("segment[{k}]"),
                    message: "exactly one of `theta` or `theta_csv` is required".into(),
                })
            }
        };
        thetas.push(ProbMatrix::new(values, file.symmetric)?);
    }
    Ok(ModelSpec {
        horizon: file.horizon,
        n1: file.n1,
        n2: file.n2,
        symmetric: file.symmetric,
        dependence: file.dependence,
        change_points: file.change_points,
        segment_thetas: thetas,
    })
}

/// Writes a model specification as TOML next to any needed matrix CSVs.
///
/// Constant mean matrices are stored as scalar `theta` keys; non-constant
/// ones are written to `<stem>_segment<k>.csv` beside the spec file.
pub fn write_model_spec<S: Scalar>(path: &Path, spec: &ModelSpec<S>) -> Result<()> {
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "spec".into());
    let mut segments = Vec::with_capacity(spec.segment_thetas.len());
    for (k, th) in spec.segment_thetas.iter().enumerate() {
        let first = th.get(0, 0);
        let constant = th.values().iter().all(|&v| v == first);
        if constant {
            segments.push(SegmentFile {
                theta: Some(to_f64(first)),
                theta_csv: None,
            });
        } else {
            let rel = format!("{stem}_segment{k}.csv");
            let mpath = base.join(&rel);
            fs::write(&mpath, matrix_to_csv(th.values()))
                .map_err(|e| Error::io(mpath.display().to_string(), e))?;
            segments.push(SegmentFile {
                theta: None,
                theta_csv: Some(rel),
            });
        }
    }
    let file = SpecFile {
        horizon: spec.horizon,
        n1: spec.n1,
        n2: spec.n2,
        symmetric: spec.symmetric,
        dependence: spec.dependence,
        change_points: spec.change_points.clone(),
        segment: segments,
    };
    let text = toml::to_string(&file)
        .map_err(|e| Error::InvalidParameter(format!("spec serialization: {e}")))?;
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Resolves a path argument against an optional base directory.
pub fn resolve(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p.to_path_buf(),
    }
}
