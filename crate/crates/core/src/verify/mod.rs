//! Finite-difference verification of the evolution equations, the static
//! Simons identity, and a maximum-principle harness for reaction-diffusion
//! systems of polynomial type.

pub mod evolution;
pub mod maxprin;
mod round;
mod suite;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{integrate_fixed, FlowError, Snapshot};
use crate::geometry::covariant::covariant;
use crate::geometry::{total_volume, GeometryError};
use crate::model::{ModelError, ModelSpace};
use crate::surface::DiscreteHypersurface;

pub use round::{closed_form_window, geodesic_radius_track, round_radius};
pub use suite::{verify_suite, SuiteOptions};
pub use evolution::{mean_curvature_rhs_forms, triple_residual, Equation};
pub use maxprin::{
    mp_scalar_run, mp_tensor_run, random_scalar_case, random_tensor_case, Background,
    PolynomialTypeMap, Primitive, ScalarCase, ScalarHistory, TensorCase, TensorHistory, Term,
    Value, M2,
};

/// Agreement required between the two algebraically equal forms of the
/// mean curvature equation.
pub const FORM_AGREEMENT: f64 = 1e-12;
/// Relative tolerance of measured convergence factors.
pub const FACTOR_TOLERANCE: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("window holds {0} snapshots, at least 3 are needed")]
    WindowTooShort(usize),
    #[error("the curve was respaced inside the window")]
    RedistributionInWindow,
    #[error("snapshots do not share material points")]
    MaterialMismatch,
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("time step {dt:e} exceeds the diffusion limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("ill-typed map: {0}")]
    IllTypedMap(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Surface(#[from] crate::surface::SurfaceError),
}

impl From<ModelError> for VerifyError {
    fn from(e: ModelError) -> Self {
        VerifyError::UnsupportedModel(e.to_string())
    }
}

/// Pass ceilings on absolute residuals. `None` disables the ceiling, leaving
/// the convergence factors as the only criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ceilings {
    /// Metric, mean curvature and area element residuals on closed-form
    /// (circle, sphere) windows.
    pub round: f64,
    /// `|A|²` residual on closed-form windows; first derivatives of curvature
    /// amplify noise.
    pub a_norm: f64,
    /// Integrated volume residual, relative to `∫‖H‖² dμ`.
    pub volume: f64,
    /// Simons residual on umbilic data.
    pub simons_round: f64,
    /// dt-attributable residual in temporal refinement studies.
    pub window: Option<f64>,
    /// Finest-grid Simons residual, relative to `max |Δh|_g`, in spatial studies.
    pub simons: Option<f64>,
}

impl Default for Ceilings {
    fn default() -> Self {
        Ceilings {
            round: 1e-6,
            a_norm: 1e-4,
            volume: 0.02,
            simons_round: 1e-8,
            window: None,
            simons: None,
        }
    }
}

impl Ceilings {
    /// Ceiling of `eq` on closed-form data.
    pub fn round_for(&self, eq: Equation) -> f64 {
        match eq {
            Equation::ANorm => self.a_norm,
            _ => self.round,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
}

impl Window {
    pub fn all() -> Self {
        Window {
            t0: f64::NEG_INFINITY,
            t1: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    None,
    Space,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: String,
    pub window: (f64, f64),
    #[serde(with = "crate::nonfinite")]
    pub residual_max: f64,
    #[serde(with = "crate::nonfinite")]
    pub residual_l2: f64,
    /// Expected orders of accuracy `(space, time)`.
    pub expected_order: (u32, u32),
    pub refinement: Refinement,
    #[serde(with = "crate::nonfinite::vec")]
    pub factors: Vec<f64>,
    pub ceiling: Option<f64>,
    /// Largest gap between the two forms of the mean curvature equation, when checked.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form_gap: Option<f64>,
    pub pass: bool,
}

impl ResidualReport {
    fn new(
        equation: &str,
        window: (f64, f64),
        expected_order: (u32, u32),
        ceiling: Option<f64>,
    ) -> Self {
        ResidualReport {
            equation: equation.to_string(),
            window,
            residual_max: 0.0,
            residual_l2: 0.0,
            expected_order,
            refinement: Refinement::None,
            factors: Vec::new(),
            ceiling,
            form_gap: None,
            pass: false,
        }
    }

    /// Factor per refinement level implied by the expected order.
    pub fn expected_factor(&self) -> Option<f64> {
        match self.refinement {
            Refinement::None => None,
            Refinement::Space => Some(2f64.powi(self.expected_order.0 as i32)),
            Refinement::Time => Some(2f64.powi(self.expected_order.1 as i32)),
        }
    }

    fn finish(mut self) -> Self {
        let factors_ok = match self.expected_factor() {
            None => true,
            Some(e) => {
                !self.factors.is_empty()
                    && self
                        .factors
                        .iter()
                        .all(|f| (f / e - 1.0).abs() <= FACTOR_TOLERANCE)
            }
        };
        let forms_ok = self.form_gap.is_none_or(|g| g <= FORM_AGREEMENT);
        let below = self.ceiling.is_none_or(|c| self.residual_max <= c);
        self.pass = factors_ok && forms_ok && below && self.residual_max.is_finite();
        self
    }
}

fn expected_order(eq: Equation) -> (u32, u32) {
    match eq {
        Equation::Metric | Equation::MeanCurvature | Equation::ANorm | Equation::AreaElement => (2, 1),
    }
}

/// Max and root-mean-square over the defined entries.
fn max_and_l2<'a>(values: impl IntoIterator<Item = &'a Option<f64>>) -> (f64, f64) {
    let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for v in values.into_iter().flatten() {
        max = max.max(*v);
        sum += v * v;
        n += 1;
    }
    (max, if n == 0 { 0.0 } else { (sum / n as f64).sqrt() })
}

fn in_window(traj: &[Snapshot], window: Window) -> Vec<&Snapshot> {
    traj.iter()
        .filter(|s| s.t >= window.t0 && s.t <= window.t1)
        .collect()
}

/// Residual of `eq` at every interior snapshot of the window.
fn window_report(
    eq: Equation,
    traj: &[Snapshot],
    window: Window,
    ceiling: f64,
) -> Result<ResidualReport, VerifyError> {
    let snaps = in_window(traj, window);
    if snaps.len() < 3 {
        return Err(VerifyError::WindowTooShort(snaps.len()));
    }
    if snaps[1..].iter().any(|s| s.redistributed) {
        return Err(VerifyError::RedistributionInWindow);
    }
    let mut all = Vec::new();
    for w in snaps.windows(3) {
        all.extend(triple_residual(eq, [w[0], w[1], w[2]])?.residual);
    }
    let (max, l2) = max_and_l2(&all);
    let mut r = ResidualReport::new(
        eq.name(),
        (snaps[0].t, snaps[snaps.len() - 1].t),
        expected_order(eq),
        Some(ceiling),
    );
    r.residual_max = max;
    r.residual_l2 = l2;
    Ok(r)
}

/// `∂g/∂t = -2‖H‖h` along a recorded window.
pub fn verify_metric_evolution(
    traj: &[Snapshot],
    window: Window,
    ceiling: f64,
) -> Result<ResidualReport, VerifyError> {
    Ok(window_report(Equation::Metric, traj, window, ceiling)?.finish())
}

/// Mean curvature equation along a recorded window. For curves in the base
/// sphere the O'Neill form of the right-hand side is also compared with
/// `Δk + k³ + K̄k` at every vertex.
pub fn verify_h_evolution(
    traj: &[Snapshot],
    window: Window,
    model: &ModelSpace,
    ceiling: f64,
) -> Result<ResidualReport, VerifyError> {
    let mut r = window_report(Equation::MeanCurvature, traj, window, ceiling)?;
    if let ModelSpace::HomogeneousSphereBase { .. } = model {
        let mut gap = 0.0f64;
        for s in in_window(traj, window) {
            let (paper, classical) = mean_curvature_rhs_forms(&*s.geometry_transient()?, model)?;
            for (p, c) in paper.iter().zip(&classical) {
                gap = gap.max((p - c).abs() / c.abs().max(1.0));
            }
        }
        r.form_gap = Some(gap);
    }
    Ok(r.finish())
}

/// `∂|A|²/∂t = Δ|A|² - 2|∇A|² + 2|A|⁴` along a recorded window (flat model).
pub fn verify_a_norm_evolution(
    traj: &[Snapshot],
    window: Window,
    ceiling: f64,
) -> Result<ResidualReport, VerifyError> {
    Ok(window_report(Equation::ANorm, traj, window, ceiling)?.finish())
}

/// Integrated volume residual `|dV/dt + ∫‖H‖² dμ| / ∫‖H‖² dμ` at every interior
/// snapshot. `residual_max` is the worst integrated value; `residual_l2` is the
/// root-mean-square per-vertex residual of the area element equation.
pub fn verify_volume_evolution(
    traj: &[Snapshot],
    ceiling: f64,
) -> Result<ResidualReport, VerifyError> {
    if traj.len() < 3 {
        return Err(VerifyError::WindowTooShort(traj.len()));
    }
    let (worst, _) = integrated_volume_residuals(traj)?;
    let mut pointwise = Vec::new();
    let material = traj[1..].iter().all(|s| !s.redistributed);
    if material {
        for w in traj.windows(3) {
            pointwise.extend(triple_residual(Equation::AreaElement, [&w[0], &w[1], &w[2]])?.residual);
        }
    }
    let mut r = ResidualReport::new(
        "volume",
        (traj[0].t, traj[traj.len() - 1].t),
        expected_order(Equation::AreaElement),
        Some(ceiling),
    );
    r.residual_max = worst;
    r.residual_l2 = max_and_l2(&pointwise).1;
    Ok(r.finish())
}

/// Relative integrated volume residual at each interior snapshot, with its time.
pub fn integrated_volume_residuals(traj: &[Snapshot]) -> Result<(f64, Vec<(f64, f64)>), VerifyError> {
    let mut out = Vec::with_capacity(traj.len().saturating_sub(2));
    let vols: Vec<f64> = traj.iter().map(|s| total_volume(&s.surface)).collect();
    for k in 1..traj.len().saturating_sub(1) {
        let (ta, tc, tb) = (traj[k - 1].t, traj[k].t, traj[k + 1].t);
        let (h1, h2) = (tc - ta, tb - tc);
        let rate = -h2 / (h1 * (h1 + h2)) * vols[k - 1]
            + (h2 - h1) / (h1 * h2) * vols[k]
            + h1 / (h2 * (h1 + h2)) * vols[k + 1];
        let f = traj[k].geometry_transient()?;
        let h2int = f.integrate(&f.mean.iter().map(|h| h * h).collect::<Vec<_>>());
        out.push((tc, (rate + h2int).abs() / h2int));
    }
    let worst = out.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok((worst, out))
}

fn check_simons_model(state: &DiscreteHypersurface) -> Result<(), VerifyError> {
    match (state.model, state.as_graph()) {
        (ModelSpace::Flat { dim: 3 }, Some(_)) => Ok(()),
        _ => Err(VerifyError::UnsupportedModel(
            "the Simons identity is checked on surfaces in flat R³".into(),
        )),
    }
}

/// Simons residual per vertex on the rows where it is defined and whose
/// colatitude lies in `band`.
fn simons_values(
    state: &DiscreteHypersurface,
    band: (f64, f64),
) -> Result<(Vec<Option<f64>>, f64), VerifyError> {
    check_simons_model(state)?;
    let g = state.as_graph().expect("checked");
    let c = covariant(state)?;
    let mut vals = vec![None; c.simons_residual.len()];
    let mut scale = 0.0f64;
    for i in 0..g.n_theta {
        let th = g.theta(i);
        if th < band.0 - 1e-12 || th > band.1 + 1e-12 {
            continue;
        }
        for j in 0..g.n_phi {
            let k = g.idx(i, j);
            if c.second_valid[k] {
                vals[k] = Some(c.simons_residual[k]);
                scale = scale.max(c.simons_scale[k]);
            }
        }
    }
    Ok((vals, scale))
}

/// Static Simons identity `Δh = ∇d‖H‖ + ‖H‖(A²)♯ - |A|²h` on a surface in R³.
pub fn verify_simons(state: &DiscreteHypersurface, ceiling: f64) -> Result<ResidualReport, VerifyError> {
    let (vals, _) = simons_values(state, (0.0, std::f64::consts::PI))?;
    let (max, l2) = max_and_l2(&vals);
    let mut r = ResidualReport::new("simons", (0.0, 0.0), (2, 0), Some(ceiling));
    r.residual_max = max;
    r.residual_l2 = l2;
    Ok(r.finish())
}

/// Simons residual under grid refinement. `levels` must be successive grid
/// doublings of the same shape; factors compare the max residual over the
/// colatitude band. The ceiling applies to the finest residual relative to
/// the largest `|Δh|_g` in the band.
pub fn simons_refinement_study(
    levels: &[DiscreteHypersurface],
    band: (f64, f64),
    ceiling: Option<f64>,
) -> Result<ResidualReport, VerifyError> {
    if levels.len() < 2 {
        return Err(VerifyError::WindowTooShort(levels.len()));
    }
    let mut maxes = Vec::new();
    let mut last = (0.0, 0.0, 1.0);
    for s in levels {
        let (vals, scale) = simons_values(s, band)?;
        let (max, l2) = max_and_l2(&vals);
        maxes.push(max);
        last = (max, l2, scale);
    }
    let mut r = ResidualReport::new("simons", (0.0, 0.0), (2, 0), ceiling);
    r.refinement = Refinement::Space;
    r.factors = maxes.windows(2).map(|w| w[0] / w[1]).collect();
    r.residual_max = last.0 / last.2;
    r.residual_l2 = last.1 / last.2;
    Ok(r.finish())
}

/// Residual of `eq` at `t = dt0` from fixed-step runs with steps
/// `dt0, dt0/2, …` (`levels` runs). Factors compare successive differences
/// `R_k - R_{k+1}` in root-mean-square; the finest difference is the
/// dt-attributable residual tested against the ceiling.
pub fn temporal_refinement_study(
    eq: Equation,
    surface: &DiscreteHypersurface,
    dt0: f64,
    levels: usize,
    ceiling: Option<f64>,
) -> Result<ResidualReport, VerifyError> {
    if levels < 3 {
        return Err(VerifyError::WindowTooShort(levels));
    }
    let mut residuals = Vec::with_capacity(levels);
    for k in 0..levels {
        let m = 1u64 << k;
        let dt = dt0 / m as f64;
        let snaps = integrate_fixed(surface, dt, m + 1, 1)?;
        let c = m as usize;
        residuals.push(triple_residual(eq, [&snaps[c - 1], &snaps[c], &snaps[c + 1]])?.residual);
    }
    let diffs: Vec<(f64, f64)> = residuals
        .windows(2)
        .map(|w| {
            let d: Vec<Option<f64>> = w[0]
                .iter()
                .zip(&w[1])
                .map(|(a, b)| a.zip(*b).map(|(a, b)| (a - b).abs()))
                .collect();
            max_and_l2(&d)
        })
        .collect();
    let mut r = ResidualReport::new(eq.name(), (0.0, 2.0 * dt0), expected_order(eq), ceiling);
    r.refinement = Refinement::Time;
    r.factors = diffs.windows(2).map(|w| w[0].1 / w[1].1).collect();
    let finest = diffs[diffs.len() - 1];
    r.residual_max = finest.0;
    r.residual_l2 = finest.1;
    Ok(r.finish())
}
