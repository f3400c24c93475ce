//! Configuration parsing and bit-stable output files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! emitted value parses back to the identical `f64` and identical runs give
//! identical bytes.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

use crate::diagnostics::DiagnosticsRow;
use crate::flow::{FlowConfig, Trajectory};
use crate::surface::Shape;
use crate::verify::ResidualReport;

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SNAPSHOTS_FILE: &str = "snapshots.ndjson";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parse and validate a JSON configuration. Parse errors carry the key path
/// of the offending value; unknown keys are rejected.
pub fn parse_config_str(text: &str) -> Result<FlowConfig, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: FlowConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        IoError::Parse {
            path,
            message: e.into_inner().to_string(),
        }
    })?;
    config.validate().map_err(IoError::Validation)?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<FlowConfig, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_config_str(&text)
}

/// Shortest decimal that parses back to exactly `x`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

/// Column names of `diagnostics.csv` for the given `δ` list.
pub fn csv_header(deltas: &[f64]) -> String {
    let mut cols: Vec<String> = [
        "t",
        "dt",
        "h_max",
        "h_min",
        "collapse_ratio",
        "lambda_max",
        "lambda_min",
        "eigen_ratio",
        "epsilon",
        "convexity_margin",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(deltas.iter().map(|d| format!("psi_sup_{}", fmt_float(*d))));
    cols.extend(
        [
            "vol",
            "grad_ratio",
            "sobolev_1",
            "sobolev_2",
            "ricci_bound",
            "intrinsic_diameter",
            "myers_bound",
            "stop",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

pub fn csv_row(r: &DiagnosticsRow) -> String {
    let mut s = String::new();
    for x in [
        r.t,
        r.dt,
        r.h_max,
        r.h_min,
        r.collapse_ratio,
        r.lambda_max,
        r.lambda_min,
        r.eigen_ratio,
        r.epsilon,
        r.convexity_margin,
    ] {
        let _ = write!(s, "{},", fmt_float(x));
    }
    for p in &r.psi_sup {
        let _ = write!(s, "{},", fmt_float(p.sup));
    }
    let _ = write!(
        s,
        "{},{},{},{},{},{},{},{}",
        fmt_float(r.vol),
        fmt_float(r.grad_ratio),
        r.sobolev_1,
        r.sobolev_2,
        fmt_float(r.ricci_bound),
        fmt_float(r.intrinsic_diameter),
        fmt_float(r.myers_bound),
        r.stop.map_or("", |s| s.as_str()),
    );
    s
}

/// `diagnostics.csv` contents for a trajectory.
pub fn diagnostics_csv(traj: &Trajectory, deltas: &[f64]) -> String {
    let mut out = csv_header(deltas);
    out.push('\n');
    for r in traj.rows() {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: FlowConfig,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub start_time: f64,
    pub end_time: f64,
    pub stop_reason: Option<String>,
    pub estimated_t: Option<f64>,
    pub steps: Option<u64>,
    pub artifacts: Vec<String>,
    /// SHA-256 of each data artifact, keyed by file name.
    pub digests: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub manifest: RunManifest,
    pub final_row: Option<DiagnosticsRow>,
    pub reports: Vec<ResidualReport>,
}

pub fn epoch_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct SnapshotLine<'a> {
    step: u64,
    t: f64,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<[usize; 2]>,
    vertices: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ids: Option<&'a [u32]>,
}

fn write_snapshots(traj: &Trajectory, path: &Path) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for s in &traj.snapshots {
        let vertices = s.surface.positions().iter().map(|p| [p.x, p.y, p.z]).collect();
        let line = match &s.surface.shape {
            Shape::Curve(c) => SnapshotLine {
                step: s.step,
                t: s.t,
                kind: "curve",
                grid: None,
                vertices,
                ids: Some(&c.ids),
            },
            Shape::Graph(g) => SnapshotLine {
                step: s.step,
                t: s.t,
                kind: "radial_graph",
                grid: Some([g.n_theta, g.n_phi]),
                vertices,
                ids: None,
            },
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// What to write besides `summary.json`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EmitOptions {
    pub snapshots: bool,
}

/// Write `diagnostics.csv` (when a trajectory is given), optionally
/// `snapshots.ndjson`, and `summary.json` into `outdir`.
pub fn emit(
    outdir: &Path,
    config: &FlowConfig,
    traj: Option<&Trajectory>,
    reports: &[ResidualReport],
    started: SystemTime,
    opts: EmitOptions,
) -> Result<RunManifest, IoError> {
    fs::create_dir_all(outdir).map_err(io_err(outdir))?;
    let mut artifacts = Vec::new();
    let mut digests = BTreeMap::new();
    if let Some(traj) = traj {
        let csv = diagnostics_csv(traj, &config.deltas);
        let path = outdir.join(DIAGNOSTICS_FILE);
        fs::write(&path, csv.as_bytes()).map_err(io_err(&path))?;
        digests.insert(DIAGNOSTICS_FILE.to_string(), sha256_hex(csv.as_bytes()));
        artifacts.push(DIAGNOSTICS_FILE.to_string());
        if opts.snapshots {
            let path = outdir.join(SNAPSHOTS_FILE);
            write_snapshots(traj, &path)?;
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            digests.insert(SNAPSHOTS_FILE.to_string(), sha256_hex(&bytes));
            artifacts.push(SNAPSHOTS_FILE.to_string());
        }
    }
    artifacts.push(SUMMARY_FILE.to_string());
    let manifest = RunManifest {
        config: config.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        start_time: epoch_seconds(started),
        end_time: epoch_seconds(SystemTime::now()),
        stop_reason: traj.map(|t| t.stop.as_str().to_string()),
        estimated_t: traj.map(|t| t.estimated_t),
        steps: traj.map(|t| t.steps),
        artifacts,
        digests,
    };
    let summary = Summary {
        manifest: manifest.clone(),
        final_row: traj.and_then(|t| t.rows().last().cloned()),
        reports: reports.to_vec(),
    };
    let path = outdir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary)?;
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_summary(path: &Path) -> Result<Summary, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| IoError::Parse {
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

/// Names of artifacts in `dir` whose digest no longer matches the manifest.
pub fn stale_digests(manifest: &RunManifest, dir: &Path) -> Result<Vec<String>, IoError> {
    let mut stale = Vec::new();
    for (name, digest) in &manifest.digests {
        let path = dir.join(name);
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        if &sha256_hex(&bytes) != digest {
            stale.push(name.clone());
        }
    }
    Ok(stale)
}

/// Human-readable rendering of a summary.
pub fn render_report(summary: &Summary) -> String {
    let m = &summary.manifest;
    let mut s = String::new();
    let _ = writeln!(s, "mcflab {}", m.tool_version);
    let _ = writeln!(
        s,
        "shape {:?} {:?}, resolution {:?}, cfl {}",
        m.config.shape.name, m.config.shape.params, m.config.resolution, m.config.cfl
    );
    if let Some(stop) = &m.stop_reason {
        let _ = writeln!(s, "stop: {stop}");
    }
    if let Some(steps) = m.steps {
        let _ = writeln!(s, "steps: {steps}");
    }
    if let Some(t) = m.estimated_t {
        let _ = writeln!(s, "estimated extinction time: {t}");
    }
    if let Some(r) = &summary.final_row {
        let _ = writeln!(
            s,
            "final: t {} h_max {} collapse_ratio {} eigen_ratio {} lambda_min {}",
            r.t, r.h_max, r.collapse_ratio, r.eigen_ratio, r.lambda_min
        );
    }
    for r in &summary.reports {
        let _ = writeln!(
            s,
            "{:<16} {}  max {:.3e}  l2 {:.3e}  factors {:?}",
            r.equation,
            if r.pass { "pass" } else { "FAIL" },
            r.residual_max,
            r.residual_l2,
            r.factors
        );
    }
    s
}
