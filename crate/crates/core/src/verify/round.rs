//! Closed-form shrinking solutions for round initial data.
//!
//! Circles and spheres in flat space satisfy `r² = r₀² - 2nt`. A geodesic
//! circle of radius `ρ` in the base sphere of radius `R` has curvature
//! `cot(ρ/R)/R`, so `cos(ρ/R) = cos(ρ₀/R)·exp(t/R²)`.

use crate::flow::{FlowConfig, ShapeName, Snapshot};
use crate::surface::DiscreteHypersurface;

use super::VerifyError;

/// Radius (geodesic radius for geodesic circles) of the exact solution at
/// time `t`, or `None` past extinction.
pub fn round_radius(config: &FlowConfig, t: f64) -> Result<Option<f64>, VerifyError> {
    let r0 = *config
        .shape
        .params
        .first()
        .ok_or_else(|| VerifyError::UnsupportedModel("round shapes need a radius".into()))?;
    let sq = |n: f64| {
        let v = r0 * r0 - 2.0 * n * t;
        (v > 0.0).then(|| v.sqrt())
    };
    Ok(match config.shape.name {
        ShapeName::Circle => sq(1.0),
        ShapeName::Sphere => sq(2.0),
        ShapeName::GeodesicCircle => {
            let big_r = config.model.base_radius().ok_or_else(|| {
                VerifyError::UnsupportedModel("geodesic circles need the homogeneous base".into())
            })?;
            let c = (r0 / big_r).cos() * (t / (big_r * big_r)).exp();
            (c < 1.0).then(|| big_r * c.acos())
        }
        ShapeName::Ellipse | ShapeName::Ellipsoid => {
            return Err(VerifyError::UnsupportedModel(format!(
                "no closed-form solution for {:?}",
                config.shape.name
            )))
        }
    })
}

fn exact_surface(config: &FlowConfig, t: f64) -> Result<DiscreteHypersurface, VerifyError> {
    let r = round_radius(config, t)?.ok_or_else(|| {
        VerifyError::UnsupportedModel(format!("t = {t} is past extinction"))
    })?;
    let mut c = config.clone();
    c.shape.params[0] = r;
    Ok(c.build_surface()?)
}

/// Exact snapshots at `t - dt, t, t + dt` (with `t - dt` clamped at 0).
pub fn closed_form_window(config: &FlowConfig, t: f64, dt: f64) -> Result<Vec<Snapshot>, VerifyError> {
    let times = [(t - dt).max(0.0), t, t + dt];
    times
        .iter()
        .enumerate()
        .map(|(k, &tk)| Ok(Snapshot::new(k as u64, tk, exact_surface(config, tk)?)))
        .collect()
}

/// Mean geodesic distance of the vertices from the north pole of the base sphere.
pub fn geodesic_radius_track(snapshots: &[Snapshot]) -> Vec<(f64, f64)> {
    snapshots
        .iter()
        .filter_map(|s| {
            let c = s.surface.as_curve()?;
            let big_r = c.base_radius?;
            let mean = c
                .points
                .iter()
                .map(|p| big_r * (p.z / p.norm()).clamp(-1.0, 1.0).acos())
                .sum::<f64>()
                / c.points.len() as f64;
            Some((s.t, mean))
        })
        .collect()
}
