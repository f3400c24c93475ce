//! Explicit Euler integration of `∂F/∂t = ‖H‖ ξ` on the base, with CFL-limited
//! steps, rejection/retry and stop detection.

mod config;
mod filter;
mod redistribute;

use serde::{Deserialize, Serialize};
use std::borrow::Cow;
use std::sync::OnceLock;
use thiserror::Error;

use crate::diagnostics::{diagnostics_row, DiagnosticsRow};
use crate::geometry::{compute_geometry, curve, graph, GeometryError, GeometryField};
use crate::surface::{Curve, DiscreteHypersurface, RadialGraph, Shape, SurfaceError};

pub use config::{FlowConfig, ShapeName, ShapeSpec, StopConfig};
pub use redistribute::{redistribute, spacing_ratio};

/// Smallest `⟨ξ, inward radial direction⟩` a radial graph may reach.
pub const MIN_RADIAL_COSINE: f64 = 0.1;
pub const MAX_RETRIES: usize = 20;
pub const DT_FLOOR: f64 = 1e-14;
/// Curves are respaced once the edge-length ratio exceeds this.
pub const REDISTRIBUTE_RATIO: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("step rejected: {0}")]
    StepRejected(String),
    #[error("time step {0:e} fell below the floor")]
    DtUnderflow(f64),
    #[error("flow stalled at t = {t} (step {step}): {reason}")]
    FlowStalled { t: f64, step: u64, reason: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    HStop,
    MinVolume,
    DtUnderflow,
    MaxSteps,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::HStop => "h_stop",
            StopReason::MinVolume => "min_volume",
            StopReason::DtUnderflow => "dt_underflow",
            StopReason::MaxSteps => "max_steps",
        }
    }
}

/// A recorded state. The geometry is computed on first access.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: u64,
    pub t: f64,
    pub surface: DiscreteHypersurface,
    pub row: Option<DiagnosticsRow>,
    /// The curve was respaced since the previous snapshot.
    pub redistributed: bool,
    field: OnceLock<GeometryField>,
}

impl Snapshot {
    pub fn new(step: u64, t: f64, surface: DiscreteHypersurface) -> Self {
        Snapshot {
            step,
            t,
            surface,
            row: None,
            redistributed: false,
            field: OnceLock::new(),
        }
    }

    pub fn geometry(&self) -> Result<&GeometryField, GeometryError> {
        if let Some(f) = self.field.get() {
            return Ok(f);
        }
        let f = compute_geometry(&self.surface)?;
        Ok(self.field.get_or_init(|| f))
    }

    /// The cached field if there is one, otherwise a fresh field that is not
    /// retained. Use when sweeping long trajectories.
    pub fn geometry_transient(&self) -> Result<Cow<'_, GeometryField>, GeometryError> {
        match self.field.get() {
            Some(f) => Ok(Cow::Borrowed(f)),
            None => Ok(Cow::Owned(compute_geometry(&self.surface)?)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub stop: StopReason,
    /// Last time plus the first-order remaining-volume extrapolation `V / |dV/dt|`.
    pub estimated_t: f64,
    pub steps: u64,
}

impl Trajectory {
    pub fn rows(&self) -> impl Iterator<Item = &DiagnosticsRow> {
        self.snapshots.iter().filter_map(|s| s.row.as_ref())
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectories are never empty")
    }
}

/// What a step and its CFL bound need from the current state.
enum StepData {
    Curve(curve::Local),
    Graph(graph::Local),
}

impl StepData {
    fn new(surface: &DiscreteHypersurface) -> Result<Self, GeometryError> {
        Ok(match &surface.shape {
            Shape::Curve(c) => StepData::Curve(curve::Local::new(c)?),
            Shape::Graph(g) => StepData::Graph(graph::Local::new(g)?),
        })
    }

    fn max_mean(&self) -> f64 {
        match self {
            StepData::Curve(l) => l.k.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            StepData::Graph(l) => l.v[l.np..(l.nt - 1) * l.np]
                .iter()
                .map(|v| v.mean)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn max_abs_lambda(&self) -> f64 {
        match self {
            StepData::Curve(l) => l.k.iter().fold(0.0, |m, k| m.max(k.abs())),
            StepData::Graph(l) => l
                .v
                .iter()
                .fold(0.0, |m, v| m.max(v.principal[0].abs()).max(v.principal[1].abs())),
        }
    }
}

fn curve_step(c: &Curve, l: &curve::Local, dt: f64) -> Result<Curve, FlowError> {
    let n = c.points.len();
    let points: Vec<_> = (0..n)
        .map(|i| {
            let d = dt * l.k[i];
            match c.base_radius {
                None => c.points[i] + d * l.normal[i],
                Some(r) => (d / r).cos() * c.points[i] + r * (d / r).sin() * l.normal[i],
            }
        })
        .collect();
    for i in 0..n {
        let j = (i + 1) % n;
        let old = c.points[j] - c.points[i];
        let new = points[j] - points[i];
        if !(new.dot(&old) > 0.0) {
            return Err(FlowError::StepRejected(format!("edge {i} collapsed or flipped")));
        }
    }
    Ok(Curve {
        points,
        ids: c.ids.clone(),
        base_radius: c.base_radius,
    })
}

fn graph_step(g: &RadialGraph, l: &graph::Local, dt: f64) -> Result<RadialGraph, FlowError> {
    let (nt, np) = (g.n_theta, g.n_phi);
    let mut inc = vec![0.0; nt * np];
    for k in np..(nt - 1) * np {
        let v = &l.v[k];
        if !(v.cosang >= MIN_RADIAL_COSINE) {
            return Err(FlowError::StepRejected(format!(
                "radial cosine {} at vertex {k}",
                v.cosang
            )));
        }
        inc[k] = -dt * v.mean / v.cosang;
    }
    filter::polar_filter(nt, np).apply(&mut inc);
    let mut next = g.clone();
    for (r, d) in next.r.iter_mut().zip(&inc) {
        *r += d;
    }
    next.fill_poles();
    if let Some(k) = next.r.iter().position(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(FlowError::StepRejected(format!(
            "radial value {} at vertex {k}",
            next.r[k]
        )));
    }
    Ok(next)
}

fn step_with(
    surface: &DiscreteHypersurface,
    data: &StepData,
    dt: f64,
) -> Result<DiscreteHypersurface, FlowError> {
    let shape = match (&surface.shape, data) {
        (Shape::Curve(c), StepData::Curve(l)) => Shape::Curve(curve_step(c, l, dt)?),
        (Shape::Graph(g), StepData::Graph(l)) => Shape::Graph(graph_step(g, l, dt)?),
        _ => unreachable!("step data built from the same surface"),
    };
    Ok(DiscreteHypersurface {
        model: surface.model,
        shape,
    })
}

/// One explicit Euler step of length `dt`: every vertex moves by `dt ‖H‖ ξ`
/// (curves in the base sphere along the geodesic), radial graphs through the
/// induced radial speed `-‖H‖ / cos`.
pub fn flow_step(surface: &DiscreteHypersurface, dt: f64) -> Result<DiscreteHypersurface, FlowError> {
    if !(dt > 0.0) {
        return Err(FlowError::StepRejected(format!("non-positive dt {dt}")));
    }
    step_with(surface, &StepData::new(surface)?, dt)
}

/// Smallest vertex spacing governing the explicit diffusion limit.
pub fn min_spacing(surface: &DiscreteHypersurface) -> f64 {
    match &surface.shape {
        Shape::Curve(c) => curve::edge_lengths(c).into_iter().fold(f64::INFINITY, f64::min),
        Shape::Graph(g) => {
            let (nt, np) = (g.n_theta, g.n_phi);
            let filter = filter::polar_filter(nt, np);
            let mut h = f64::INFINITY;
            for i in 0..nt - 1 {
                for j in 0..np {
                    h = h.min((g.position(i + 1, j) - g.position(i, j)).norm());
                }
            }
            for i in 1..nt - 1 {
                let factor = filter.spacing_factor(i);
                for j in 0..np {
                    let chord = (g.position(i, (j + 1) % np) - g.position(i, j)).norm();
                    h = h.min(chord / factor);
                }
            }
            h
        }
    }
}

fn cfl_from(h: f64, lambda_max: f64, c: f64) -> Result<f64, FlowError> {
    let dt = c * h * h / (lambda_max * lambda_max * h * h).max(1.0);
    if dt < DT_FLOOR {
        Err(FlowError::DtUnderflow(dt))
    } else {
        Ok(dt)
    }
}

/// `dt = c h² / max(1, λ_max² h²)` with `h` the minimum vertex spacing.
pub fn cfl_dt(surface: &DiscreteHypersurface, field: &GeometryField, c: f64) -> Result<f64, FlowError> {
    let lambda_max = (0..field.len()).fold(0.0f64, |m, v| {
        m.max(field.lambda_min(v).abs()).max(field.lambda_max(v).abs())
    });
    cfl_from(min_spacing(surface), lambda_max, c)
}

fn stalled(t: f64, step: u64, e: impl ToString) -> FlowError {
    FlowError::FlowStalled {
        t,
        step,
        reason: e.to_string(),
    }
}

fn record(
    snapshots: &mut Vec<Snapshot>,
    mut snap: Snapshot,
    dt: f64,
    config: &FlowConfig,
    stop: Option<StopReason>,
) -> Result<(), FlowError> {
    // not cached on the snapshot: long trajectories would hold every field
    let mut row = {
        let field = compute_geometry(&snap.surface)?;
        diagnostics_row(snap.t, dt, &snap.surface, &field, &config.deltas, config.sobolev_alpha)
    };
    row.stop = stop;
    snap.row = Some(row);
    snapshots.push(snap);
    Ok(())
}

/// Integrate until the mean-curvature or volume threshold, `dt` underflow or
/// the step budget, recording a diagnostics row every `cadence` steps and at
/// the final state.
pub fn run_flow(config: &FlowConfig) -> Result<Trajectory, FlowError> {
    config.validate().map_err(FlowError::Validation)?;
    let mut surface = config.build_surface()?;
    let mut data = StepData::new(&surface)?;
    let h0 = data.max_mean();
    let v0 = crate::geometry::total_volume(&surface);
    let mut snapshots = Vec::new();
    let (mut t, mut step) = (0.0, 0u64);
    let first_dt = cfl_from(min_spacing(&surface), data.max_abs_lambda(), config.cfl)
        .map_err(|e| stalled(0.0, 0, e))?;
    record(&mut snapshots, Snapshot::new(0, 0.0, surface.clone()), first_dt, config, None)?;
    let mut redistributed = false;
    let stop = loop {
        if step >= config.stops.max_steps {
            break StopReason::MaxSteps;
        }
        let dt = match cfl_from(min_spacing(&surface), data.max_abs_lambda(), config.cfl) {
            Ok(dt) => dt,
            Err(_) => break StopReason::DtUnderflow,
        };
        let mut trial = dt;
        let mut attempt = 0;
        let next = loop {
            match step_with(&surface, &data, trial) {
                Ok(s) => break s,
                Err(FlowError::StepRejected(why)) => {
                    attempt += 1;
                    if attempt > MAX_RETRIES {
                        return Err(stalled(t, step, why));
                    }
                    trial *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        t += trial;
        step += 1;
        surface = next;
        if config.redistribute {
            if let Some(c) = surface.as_curve() {
                if spacing_ratio(c) > REDISTRIBUTE_RATIO {
                    surface = redistribute(&surface);
                    redistributed = true;
                }
            }
        }
        data = StepData::new(&surface).map_err(|e| stalled(t, step, e))?;
        let stop = if data.max_mean() >= config.stops.h_factor * h0 {
            Some(StopReason::HStop)
        } else if crate::geometry::total_volume(&surface) <= config.stops.min_volume_fraction * v0 {
            Some(StopReason::MinVolume)
        } else {
            None
        };
        if stop.is_some() || step % config.cadence == 0 {
            let mut snap = Snapshot::new(step, t, surface.clone());
            snap.redistributed = std::mem::take(&mut redistributed);
            record(&mut snapshots, snap, trial, config, stop)?;
        }
        if let Some(s) = stop {
            break s;
        }
    };
    let last = snapshots.last().expect("initial snapshot recorded");
    if last.step != step {
        let snap = Snapshot::new(step, t, surface.clone());
        let dt = cfl_from(min_spacing(&surface), data.max_abs_lambda(), config.cfl).unwrap_or(0.0);
        record(&mut snapshots, snap, dt, config, Some(stop))?;
    } else if let Some(row) = snapshots.last_mut().and_then(|s| s.row.as_mut()) {
        row.stop = Some(stop);
    }
    let estimated_t = {
        let last = snapshots.last().expect("non-empty");
        let field = last.geometry()?;
        let rate: f64 = field.integrate(&field.mean.iter().map(|h| h * h).collect::<Vec<_>>());
        last.t + field.volume() / rate
    };
    Ok(Trajectory {
        snapshots,
        stop,
        estimated_t,
        steps: step,
    })
}

/// Fixed-step integration recording every `every`-th state, for verification
/// windows. No redistribution and no stop checks.
pub fn integrate_fixed(
    surface: &DiscreteHypersurface,
    dt: f64,
    steps: u64,
    every: u64,
) -> Result<Vec<Snapshot>, FlowError> {
    let every = every.max(1);
    let mut s = surface.clone();
    let mut out = vec![Snapshot::new(0, 0.0, s.clone())];
    for k in 1..=steps {
        s = flow_step(&s, dt).map_err(|e| stalled((k - 1) as f64 * dt, k - 1, e))?;
        if k % every == 0 {
            out.push(Snapshot::new(k, k as f64 * dt, s.clone()));
        }
    }
    Ok(out)
}
