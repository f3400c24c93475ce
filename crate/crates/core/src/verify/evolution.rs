//! Residuals of the evolution equations along a trajectory, evaluated on
//! triples of consecutive snapshots by three-point time differences.
//!
//! Curve vertices move normally, so grid points are material points. Radial
//! graph vertices slide along their rays; the tangential part `V_T` of the grid
//! velocity is removed through its Lie derivative (metric), its directional
//! derivative (scalars) or its divergence (area element).

use crate::geometry::covariant::covariant;
use crate::geometry::{curve, graph, laplace_beltrami, GeometryField, Sym2};
use crate::model::{oneill_trace_xi, ModelSpace};
use crate::surface::{DiscreteHypersurface, Shape, Vec3};
use crate::flow::Snapshot;

use super::VerifyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `∂g/∂t = -2 ‖H‖ h`
    Metric,
    /// `∂‖H‖/∂t = Δ‖H‖ + ‖H‖ |A|² - 3 ‖H‖ Tr((A_ξ)²)`
    MeanCurvature,
    /// `∂|A|²/∂t = Δ|A|² - 2 |∇A|² + 2 |A|⁴` (flat model)
    ANorm,
    /// `∂ dμ/∂t = -‖H‖² dμ`
    AreaElement,
}

impl Equation {
    pub fn name(&self) -> &'static str {
        match self {
            Equation::Metric => "metric",
            Equation::MeanCurvature => "mean_curvature",
            Equation::ANorm => "a_norm",
            Equation::AreaElement => "area_element",
        }
    }
}

/// Per-vertex residual at the middle snapshot of a triple; `None` where the
/// stencils are not available.
pub struct TripleResidual {
    pub residual: Vec<Option<f64>>,
    /// Magnitude of the equation's right-hand side, for scaling.
    pub rhs: Vec<Option<f64>>,
}

/// Weights of the three-point derivative at the middle of `(ta, tc, tb)`.
fn time_weights(ta: f64, tc: f64, tb: f64) -> [f64; 3] {
    let (h1, h2) = (tc - ta, tb - tc);
    [
        -h2 / (h1 * (h1 + h2)),
        (h2 - h1) / (h1 * h2),
        h1 / (h2 * (h1 + h2)),
    ]
}

fn check_same_kind(a: &DiscreteHypersurface, b: &DiscreteHypersurface) -> Result<(), VerifyError> {
    let ok = match (&a.shape, &b.shape) {
        (Shape::Curve(x), Shape::Curve(y)) => x.ids == y.ids,
        (Shape::Graph(x), Shape::Graph(y)) => x.n_theta == y.n_theta && x.n_phi == y.n_phi,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(VerifyError::MaterialMismatch)
    }
}

pub fn triple_residual(
    eq: Equation,
    snaps: [&Snapshot; 3],
) -> Result<TripleResidual, VerifyError> {
    let [a, c, b] = snaps;
    check_same_kind(&a.surface, &c.surface)?;
    check_same_kind(&c.surface, &b.surface)?;
    if c.redistributed || b.redistributed {
        return Err(VerifyError::RedistributionInWindow);
    }
    let model = c.surface.model;
    if eq == Equation::ANorm && !matches!(model, ModelSpace::Flat { .. }) {
        return Err(VerifyError::UnsupportedModel(
            "the |A|² evolution is checked in the flat model only".into(),
        ));
    }
    let w = time_weights(a.t, c.t, b.t);
    let owned = [a.geometry_transient()?, c.geometry_transient()?, b.geometry_transient()?];
    let fields = [&*owned[0], &*owned[1], &*owned[2]];
    match &c.surface.shape {
        Shape::Curve(_) => curve_residual(eq, &c.surface, fields, w, &model),
        Shape::Graph(_) => graph_residual(eq, [&a.surface, &c.surface, &b.surface], fields, w, &model),
    }
}

fn dot3(w: &[f64; 3], f: [f64; 3]) -> f64 {
    w[0] * f[0] + w[1] * f[1] + w[2] * f[2]
}

/// Right-hand side of the scalar equations at the middle snapshot.
fn scalar_rhs(
    eq: Equation,
    surface: &DiscreteHypersurface,
    f: &GeometryField,
    model: &ModelSpace,
    grad_a_sq: &[f64],
) -> Result<Vec<f64>, VerifyError> {
    Ok(match eq {
        Equation::MeanCurvature => {
            let tr = oneill_trace_xi(model, f.n)?;
            (0..f.len())
                .map(|v| {
                    let h = f.mean[v];
                    f.lap_mean[v] + h * f.a_norm_sq[v] - 3.0 * h * tr
                })
                .collect()
        }
        Equation::ANorm => {
            let lap = laplace_beltrami(surface, &f.a_norm_sq)?;
            (0..f.len())
                .map(|v| lap[v] - 2.0 * grad_a_sq[v] + 2.0 * f.a_norm_sq[v].powi(2))
                .collect()
        }
        Equation::AreaElement => f.mean.iter().map(|h| -h * h).collect(),
        Equation::Metric => unreachable!("tensor equation"),
    })
}

fn scalar_of(eq: Equation, f: &GeometryField) -> Vec<f64> {
    match eq {
        Equation::MeanCurvature => f.mean.clone(),
        Equation::ANorm => f.a_norm_sq.clone(),
        // logarithmic rate of the area element
        Equation::AreaElement => f.area_element.clone(),
        Equation::Metric => unreachable!(),
    }
}

fn curve_residual(
    eq: Equation,
    surface: &DiscreteHypersurface,
    f: [&GeometryField; 3],
    w: [f64; 3],
    model: &ModelSpace,
) -> Result<TripleResidual, VerifyError> {
    let n = f[1].len();
    let fc = f[1];
    let (residual, rhs): (Vec<_>, Vec<_>) = match eq {
        Equation::Metric => (0..n)
            .map(|v| {
                let g = fc.metric[v].xx;
                let rate = dot3(&w, [f[0].metric[v].xx, g, f[2].metric[v].xx]);
                let rhs = -2.0 * fc.mean[v] * fc.second[v].xx;
                // g-norm of a one-dimensional (0,2) tensor
                (Some((rate - rhs).abs() / g), Some(rhs.abs() / g))
            })
            .unzip(),
        _ => {
            let grad_sq: Vec<f64> = match surface.as_curve() {
                Some(c) => {
                    let l = curve::Local::new(c)?;
                    curve::derivative(&l, &l.k).iter().map(|d| d * d).collect()
                }
                None => unreachable!(),
            };
            let rhs = scalar_rhs(eq, surface, fc, model, &grad_sq)?;
            let q = [scalar_of(eq, f[0]), scalar_of(eq, fc), scalar_of(eq, f[2])];
            (0..n)
                .map(|v| {
                    let mut rate = dot3(&w, [q[0][v], q[1][v], q[2][v]]);
                    if eq == Equation::AreaElement {
                        rate /= q[1][v];
                    }
                    (Some((rate - rhs[v]).abs()), Some(rhs[v].abs()))
                })
                .unzip()
        }
    };
    Ok(TripleResidual { residual, rhs })
}

fn graph_residual(
    eq: Equation,
    s: [&DiscreteHypersurface; 3],
    f: [&GeometryField; 3],
    w: [f64; 3],
    model: &ModelSpace,
) -> Result<TripleResidual, VerifyError> {
    let gs = s.map(|x| x.as_graph().expect("graph"));
    let gc = gs[1];
    let (nt, np) = (gc.n_theta, gc.n_phi);
    let (dth, dph) = (gc.d_theta(), gc.d_phi());
    let local = graph::Local::new(gc)?;
    let fc = f[1];

    // grid velocity and its tangential part
    let mut vt = vec![Vec3::zeros(); nt * np];
    let mut up = vec![[0.0; 2]; nt * np];
    for k in np..(nt - 1) * np {
        let rt = dot3(&w, [gs[0].r[k], gc.r[k], gs[2].r[k]]);
        let u = (local.v[k].pos - gc.center) / gc.r[k];
        let vel = rt * u;
        let xi = fc.normal[k];
        vt[k] = vel - xi * vel.dot(&xi);
        let v = &local.v[k];
        let gi = v.g.inverse();
        let (a, b) = (vt[k].dot(&v.xt), vt[k].dot(&v.xp));
        up[k] = [gi.xx * a + gi.xy * b, gi.xy * a + gi.yy * b];
    }
    let at = |i: usize, j: usize| i * np + (j + np) % np;
    let d_theta = |data: &[Vec3], i: usize, j: usize| (data[at(i + 1, j)] - data[at(i - 1, j)]) / (2.0 * dth);
    let d_phi = |data: &[Vec3], i: usize, j: usize| {
        (data[at(i, j + 1)] - data[at(i, j + np - 1)]) / (2.0 * dph)
    };

    let mut residual = vec![None; nt * np];
    let mut rhs_out = vec![None; nt * np];
    match eq {
        Equation::Metric => {
            let lg = [0, 2].map(|x| graph::Local::new(gs[x]));
            let (la, lb) = match lg {
                [Ok(a), Ok(b)] => (a, b),
                [Err(e), _] | [_, Err(e)] => return Err(e.into()),
            };
            for i in 2..nt - 2 {
                for j in 0..np {
                    let k = at(i, j);
                    let v = &local.v[k];
                    let dv = [d_theta(&vt, i, j), d_phi(&vt, i, j)];
                    let x = [v.xt, v.xp];
                    let lie = |p: usize, q: usize| dv[p].dot(&x[q]) + x[p].dot(&dv[q]);
                    let comp = |p: usize, q: usize| {
                        let rate = dot3(&w, [la.v[k].g.get(p, q), v.g.get(p, q), lb.v[k].g.get(p, q)]);
                        rate - lie(p, q) + 2.0 * fc.mean[k] * v.h.get(p, q)
                    };
                    let r = Sym2::new(comp(0, 0), comp(0, 1), comp(1, 1));
                    let rhs = v.h.scale(-2.0 * fc.mean[k]);
                    residual[k] = Some(r.norm_sq(&v.g).max(0.0).sqrt());
                    rhs_out[k] = Some(rhs.norm_sq(&v.g).max(0.0).sqrt());
                }
            }
        }
        _ => {
            let grad_a_sq = if eq == Equation::ANorm {
                covariant(s[1])?.grad_a_sq
            } else {
                vec![0.0; nt * np]
            };
            let rhs = scalar_rhs(eq, s[1], fc, model, &grad_a_sq)?;
            let q = [scalar_of(eq, f[0]), scalar_of(eq, fc), scalar_of(eq, f[2])];
            let partial = graph::partials(&local, &q[1]);
            for i in 2..nt - 2 {
                for j in 0..np {
                    let k = at(i, j);
                    let mut rate = dot3(&w, [q[0][k], q[1][k], q[2][k]]);
                    let correction = if eq == Equation::AreaElement {
                        rate /= q[1][k];
                        // div V_T = (1/√g) ∂_i(√g V^i)
                        let sg = |k: usize| local.v[k].sqrt_det;
                        let flux_t = (sg(at(i + 1, j)) * up[at(i + 1, j)][0]
                            - sg(at(i - 1, j)) * up[at(i - 1, j)][0])
                            / (2.0 * dth);
                        let flux_p = (sg(at(i, j + 1)) * up[at(i, j + 1)][1]
                            - sg(at(i, j + np - 1)) * up[at(i, j + np - 1)][1])
                            / (2.0 * dph);
                        (flux_t + flux_p) / sg(k)
                    } else {
                        up[k][0] * partial[k][0] + up[k][1] * partial[k][1]
                    };
                    residual[k] = Some((rate - correction - rhs[k]).abs());
                    rhs_out[k] = Some(rhs[k].abs());
                }
            }
        }
    }
    Ok(TripleResidual {
        residual,
        rhs: rhs_out,
    })
}

/// Paper-form and classical right-hand sides of the mean curvature equation
/// for curves in a two-dimensional base:
/// `Δk + k|A|² - 3k Tr((A_ξ)²)` and `Δk + k³ + K̄ k`.
pub fn mean_curvature_rhs_forms(
    field: &GeometryField,
    model: &ModelSpace,
) -> Result<(Vec<f64>, Vec<f64>), VerifyError> {
    let tr = oneill_trace_xi(model, field.n)?;
    let kbar = model.max_sectional();
    let paper = (0..field.len())
        .map(|v| {
            let k = field.mean[v];
            field.lap_mean[v] + k * field.a_norm_sq[v] - 3.0 * k * tr
        })
        .collect();
    let classical = (0..field.len())
        .map(|v| {
            let k = field.mean[v];
            field.lap_mean[v] + k * k * k + kbar * k
        })
        .collect();
    Ok((paper, classical))
}
