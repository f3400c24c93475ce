//! Per-snapshot scalar monitors: pinching, curvature ratios, convexity
//! margins, admissibility conditions and Ricci/Myers bounds.

mod diameter;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::flow::StopReason;
use crate::geometry::GeometryField;
use crate::model::ModelSpace;
use crate::surface::DiscreteHypersurface;

pub use diameter::grid_diameter;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("mean curvature {value} is not positive at vertex {vertex}")]
    ZeroMeanCurvature { vertex: usize, value: f64 },
    #[error("arcsin argument {0} exceeds 1")]
    ArcsinDomain(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiSup {
    pub delta: f64,
    #[serde(with = "crate::nonfinite")]
    pub sup: f64,
}

/// One sampling instant of every monitored scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    #[serde(with = "crate::nonfinite")]
    pub t: f64,
    #[serde(with = "crate::nonfinite")]
    pub dt: f64,
    #[serde(with = "crate::nonfinite")]
    pub h_max: f64,
    #[serde(with = "crate::nonfinite")]
    pub h_min: f64,
    #[serde(with = "crate::nonfinite")]
    pub collapse_ratio: f64,
    #[serde(with = "crate::nonfinite")]
    pub lambda_max: f64,
    #[serde(with = "crate::nonfinite")]
    pub lambda_min: f64,
    #[serde(with = "crate::nonfinite")]
    pub eigen_ratio: f64,
    #[serde(with = "crate::nonfinite")]
    pub epsilon: f64,
    #[serde(with = "crate::nonfinite")]
    pub convexity_margin: f64,
    pub psi_sup: Vec<PsiSup>,
    #[serde(with = "crate::nonfinite")]
    pub vol: f64,
    #[serde(with = "crate::nonfinite")]
    pub grad_ratio: f64,
    pub sobolev_1: bool,
    pub sobolev_2: bool,
    #[serde(with = "crate::nonfinite")]
    pub ricci_bound: f64,
    #[serde(with = "crate::nonfinite")]
    pub intrinsic_diameter: f64,
    #[serde(with = "crate::nonfinite")]
    pub myers_bound: f64,
    pub stop: Option<StopReason>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub flag_1: bool,
    pub flag_2: bool,
    pub value_1: f64,
    pub value_2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicciMyers {
    pub ricci_lb: f64,
    pub diameter: f64,
    pub myers_bound: f64,
    pub ok: bool,
}

/// Vertices carrying independent data (graph pole rows are copies).
fn primary(field: &GeometryField) -> impl Iterator<Item = usize> + '_ {
    (0..field.len()).filter(|&v| !field.derived[v])
}

fn require_positive_mean(field: &GeometryField) -> Result<(), DiagnosticsError> {
    match primary(field).find(|&v| !(field.mean[v] > 0.0)) {
        Some(vertex) => Err(DiagnosticsError::ZeroMeanCurvature {
            vertex,
            value: field.mean[vertex],
        }),
        None => Ok(()),
    }
}

/// `ψ_δ = (|A|² - ‖H‖²/n) / ‖H‖^{2-δ}` per vertex and its supremum.
pub fn pinching_psi(field: &GeometryField, delta: f64) -> Result<(Vec<f64>, f64), DiagnosticsError> {
    require_positive_mean(field)?;
    let n = field.n as f64;
    let psi: Vec<f64> = (0..field.len())
        .map(|v| {
            if field.n == 1 {
                return 0.0;
            }
            let h = field.mean[v];
            (field.a_norm_sq[v] - h * h / n) / h.powf(2.0 - delta)
        })
        .collect();
    let sup = primary(field).map(|v| psi[v]).fold(f64::NEG_INFINITY, f64::max);
    Ok((psi, sup))
}

/// Largest `ε ≤ 1` with `‖H‖² λ_min ≥ n² L + ε ‖H‖³` at every vertex.
pub fn epsilon_sharp(field: &GeometryField, model: &ModelSpace) -> Result<f64, DiagnosticsError> {
    require_positive_mean(field)?;
    let n2l = (field.n * field.n) as f64 * model.l_constant();
    let eps = primary(field)
        .map(|v| {
            let h = field.mean[v];
            (h * h * field.lambda_min(v) - n2l) / (h * h * h)
        })
        .fold(f64::INFINITY, f64::min);
    Ok(eps.min(1.0))
}

/// `min(‖H‖² λ_min - 2 n² L)` over vertices.
pub fn convexity_margin(field: &GeometryField, model: &ModelSpace) -> f64 {
    let n2l = 2.0 * (field.n * field.n) as f64 * model.l_constant();
    primary(field)
        .map(|v| field.mean[v].powi(2) * field.lambda_min(v) - n2l)
        .fold(f64::INFINITY, f64::min)
}

/// `sup |∇‖H‖|² / ‖H‖⁴`; infinite if the mean curvature vanishes somewhere.
pub fn gradient_ratio(field: &GeometryField) -> f64 {
    primary(field)
        .map(|v| {
            let h = field.mean[v];
            if h > 0.0 {
                field.grad_mean_norm[v].powi(2) / h.powi(4)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max)
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI.powf(n as f64 / 2.0) / gamma_half_integer(n as f64 / 2.0 + 1.0),
    }
}

// Γ at half-integers and integers by recursion.
fn gamma_half_integer(x: f64) -> f64 {
    if x <= 1.0 {
        if (x - 0.5).abs() < 1e-12 {
            PI.sqrt()
        } else {
            1.0
        }
    } else {
        (x - 1.0) * gamma_half_integer(x - 1.0)
    }
}

/// The volume and injectivity-radius admissibility conditions for a
/// hypersurface of dimension `n` and volume `vol`.
pub fn sobolev_from_volume(
    vol: f64,
    n: usize,
    model: &ModelSpace,
    alpha: f64,
) -> Result<SobolevReport, DiagnosticsError> {
    let b = model.max_sectional().sqrt();
    let nf = n as f64;
    let q = (1.0 - alpha).powf(-1.0 / nf) * (vol / unit_ball_volume(n)).powf(1.0 / nf);
    let value_1 = b * b * q * q;
    let half_radius = 0.5 * model.injectivity_radius();
    let value_2 = if b > 0.0 {
        let arg = b * q;
        if arg > 1.0 {
            return Err(DiagnosticsError::ArcsinDomain(arg));
        }
        arg.asin() / b
    } else {
        q
    };
    Ok(SobolevReport {
        flag_1: value_1 <= 1.0,
        flag_2: value_2 < half_radius,
        value_1,
        value_2,
    })
}

pub fn sobolev_conditions(
    field: &GeometryField,
    model: &ModelSpace,
    alpha: f64,
) -> Result<SobolevReport, DiagnosticsError> {
    sobolev_from_volume(field.volume(), field.n, model, alpha)
}

/// Ricci lower bound from the Gauss equation and the Myers diameter bound,
/// compared with the grid-graph intrinsic diameter. Curves pass trivially.
pub fn ricci_myers(surface: &DiscreteHypersurface, field: &GeometryField) -> RicciMyers {
    match surface.as_graph() {
        None => RicciMyers {
            ricci_lb: 0.0,
            diameter: 0.5 * field.volume(),
            myers_bound: f64::INFINITY,
            ok: true,
        },
        Some(g) => {
            let l1 = primary(field)
                .map(|v| field.lambda_min(v))
                .fold(f64::INFINITY, f64::min);
            let (ricci_lb, myers_bound) = if l1 > 0.0 {
                (l1 * l1, PI / l1)
            } else {
                (0.0, f64::INFINITY)
            };
            let diameter = grid_diameter(g);
            let grid_tol = PI / (g.n_theta - 1) as f64;
            RicciMyers {
                ricci_lb,
                diameter,
                myers_bound,
                ok: diameter <= myers_bound * (1.0 + 2.0 * grid_tol),
            }
        }
    }
}

/// Per-vertex `(‖H‖ Tr A³ - |A|⁴) - n ε² ‖H‖² (|A|² - ‖H‖²/n)`, divided by
/// `‖H‖⁴` so that values are scale-free.
pub fn pinching_inequality_gap(field: &GeometryField, eps: f64) -> Vec<f64> {
    let n = field.n as f64;
    (0..field.len())
        .map(|v| {
            let l = field.lambdas(v);
            let h: f64 = l.iter().sum();
            let a2: f64 = l.iter().map(|x| x * x).sum();
            let a3: f64 = l.iter().map(|x| x * x * x).sum();
            let lhs = h * a3 - a2 * a2;
            let rhs = n * eps * eps * h * h * (a2 - h * h / n);
            (lhs - rhs) / h.powi(4)
        })
        .collect()
}

/// Assemble every monitored scalar for one snapshot.
pub fn diagnostics_row(
    t: f64,
    dt: f64,
    surface: &DiscreteHypersurface,
    field: &GeometryField,
    deltas: &[f64],
    alpha: f64,
) -> DiagnosticsRow {
    let model = &surface.model;
    let mut h_max = f64::NEG_INFINITY;
    let mut h_min = f64::INFINITY;
    let mut l_max = f64::NEG_INFINITY;
    let mut l_min = f64::INFINITY;
    let mut eigen_ratio = f64::NEG_INFINITY;
    for v in primary(field) {
        h_max = h_max.max(field.mean[v]);
        h_min = h_min.min(field.mean[v]);
        l_max = l_max.max(field.lambda_max(v));
        l_min = l_min.min(field.lambda_min(v));
        let ratio = if field.lambda_min(v) > 0.0 {
            field.lambda_max(v) / field.lambda_min(v)
        } else {
            f64::INFINITY
        };
        eigen_ratio = eigen_ratio.max(ratio);
    }
    let psi_sup = deltas
        .iter()
        .map(|&delta| PsiSup {
            delta,
            sup: pinching_psi(field, delta).map(|p| p.1).unwrap_or(f64::NAN),
        })
        .collect();
    let sob = sobolev_conditions(field, model, alpha);
    let rm = ricci_myers(surface, field);
    DiagnosticsRow {
        t,
        dt,
        h_max,
        h_min,
        collapse_ratio: h_max / h_min,
        lambda_max: l_max,
        lambda_min: l_min,
        eigen_ratio,
        epsilon: epsilon_sharp(field, model).unwrap_or(f64::NAN),
        convexity_margin: convexity_margin(field, model),
        psi_sup,
        vol: field.volume(),
        grad_ratio: gradient_ratio(field),
        sobolev_1: sob.as_ref().map(|s| s.flag_1).unwrap_or(false),
        sobolev_2: sob.as_ref().map(|s| s.flag_2).unwrap_or(false),
        ricci_bound: rm.ricci_lb,
        intrinsic_diameter: rm.diameter,
        myers_bound: rm.myers_bound,
        stop: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_geometry;
    use crate::surface::{circle, sphere};

    #[test]
    fn round_values() {
        let s = sphere(1.0, 32, 64).unwrap();
        let f = compute_geometry(&s).unwrap();
        let m = ModelSpace::flat(3);
        assert!((epsilon_sharp(&f, &m).unwrap() - 0.5).abs() < 1e-10);
        assert!((convexity_margin(&f, &m) - 4.0).abs() < 1e-9);
        assert!(pinching_psi(&f, 0.25).unwrap().1.abs() < 1e-10);
        let c = compute_geometry(&circle(1.0, 64).unwrap()).unwrap();
        assert!((epsilon_sharp(&c, &ModelSpace::flat(2)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pinching_psi(&c, 0.1).unwrap().1, 0.0);
    }

    #[test]
    fn sobolev_flat_always_admissible() {
        for vol in [1e-3, 1.0, 1e6] {
            let r = sobolev_from_volume(vol, 2, &ModelSpace::flat(3), 0.5).unwrap();
            assert!(r.flag_1 && r.flag_2);
        }
    }

    #[test]
    fn sobolev_homogeneous_example() {
        let r = sobolev_from_volume(0.1, 1, &ModelSpace::homogeneous(1.0), 0.5).unwrap();
        assert!((r.value_1 - 0.03).abs() < 1e-15);
        assert!(r.flag_1);
        assert!(matches!(
            sobolev_from_volume(10.0, 1, &ModelSpace::homogeneous(1.0), 0.5),
            Err(DiagnosticsError::ArcsinDomain(_))
        ));
    }

    #[test]
    fn unit_ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
        assert!((unit_ball_volume(5) - 8.0 * PI * PI / 15.0).abs() < 1e-12);
    }
}
