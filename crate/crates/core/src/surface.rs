//! Closed discretized hypersurfaces of the base space: cyclic polylines
//! (n = 1) and radial graphs over the unit sphere (n = 2).

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::model::ModelSpace;

pub type Vec3 = Vector3<f64>;

pub const MIN_CURVE_VERTICES: usize = 16;
pub const MIN_THETA_ROWS: usize = 16;
pub const MIN_PHI_COLUMNS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("too few vertices: {0}")]
    TooFewVertices(String),
    #[error("radial value {value} at vertex {index} is not strictly positive")]
    NonPositiveRadius { index: usize, value: f64 },
    #[error("curve self-intersects between edges {0} and {1}")]
    SelfIntersecting(usize, usize),
    #[error("shape/model mismatch: {0}")]
    ModelMismatch(String),
    #[error("bad shape parameters: {0}")]
    BadParameters(String),
}

/// Which kind of hypersurface a [`DiscreteHypersurface`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurfaceVariant {
    CurveFlat,
    CurveSphereBase,
    RadialGraph,
}

/// Cyclic polyline, counterclockwise around the enclosed region. Points are
/// stored in ambient chart coordinates: the plane `z = 0` for flat curves and
/// the round sphere of radius `base_radius` for curves in the homogeneous base.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub points: Vec<Vec3>,
    pub ids: Vec<u32>,
    pub base_radius: Option<f64>,
}

/// Positive radial function on a latitude–longitude grid. Row `i` sits at
/// polar angle `i π / (n_theta - 1)`; rows `0` and `n_theta - 1` are the poles
/// and hold a value derived from the adjacent rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGraph {
    pub n_theta: usize,
    pub n_phi: usize,
    pub r: Vec<f64>,
    pub center: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Curve(Curve),
    Graph(RadialGraph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteHypersurface {
    pub model: ModelSpace,
    pub shape: Shape,
}

impl RadialGraph {
    pub fn d_theta(&self) -> f64 {
        PI / (self.n_theta - 1) as f64
    }

    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.d_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.d_phi()
    }

    pub fn is_pole_row(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.n_theta
    }

    /// Position of grid vertex `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> Vec3 {
        self.center + self.r[self.idx(i, j)] * unit_direction(self.theta(i), self.phi(j))
    }

    /// Overwrite both pole rows with the value extrapolated from the ring means
    /// of the two adjacent latitude rows.
    ///
    /// Ring means behave like `f(pole) + c θ² + O(θ⁴)`, so `(4 m₁ - m₂) / 3`
    /// is fourth-order accurate; the plain row-1 mean would leave an `O(1)`
    /// error in second differences at row 1.
    pub fn fill_poles(&mut self) {
        fill_pole_rows(&mut self.r, self.n_theta, self.n_phi);
    }
}

/// Pole extrapolation for an arbitrary per-vertex field on the grid.
pub fn fill_pole_rows(field: &mut [f64], n_theta: usize, n_phi: usize) {
    let ring_mean =
        |i: usize, f: &[f64]| f[i * n_phi..(i + 1) * n_phi].iter().sum::<f64>() / n_phi as f64;
    let north = (4.0 * ring_mean(1, field) - ring_mean(2, field)) / 3.0;
    let south = (4.0 * ring_mean(n_theta - 2, field) - ring_mean(n_theta - 3, field)) / 3.0;
    field[..n_phi].fill(north);
    field[(n_theta - 1) * n_phi..].fill(south);
}

#[inline]
pub fn unit_direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(st * cp, st * sp, ct)
}

impl DiscreteHypersurface {
    pub fn variant(&self) -> SurfaceVariant {
        match &self.shape {
            Shape::Graph(_) => SurfaceVariant::RadialGraph,
            Shape::Curve(c) if c.base_radius.is_some() => SurfaceVariant::CurveSphereBase,
            Shape::Curve(_) => SurfaceVariant::CurveFlat,
        }
    }

    /// Hypersurface dimension `n`.
    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Curve(_) => 1,
            Shape::Graph(_) => 2,
        }
    }

    pub fn vertex_count(&self) -> usize {
        match &self.shape {
            Shape::Curve(c) => c.points.len(),
            Shape::Graph(g) => g.r.len(),
        }
    }

    /// Ambient positions of every vertex.
    pub fn positions(&self) -> Vec<Vec3> {
        match &self.shape {
            Shape::Curve(c) => c.points.clone(),
            Shape::Graph(g) => (0..g.n_theta)
                .flat_map(|i| (0..g.n_phi).map(move |j| (i, j)))
                .map(|(i, j)| g.position(i, j))
                .collect(),
        }
    }

    pub fn as_curve(&self) -> Option<&Curve> {
        match &self.shape {
            Shape::Curve(c) => Some(c),
            Shape::Graph(_) => None,
        }
    }

    pub fn as_graph(&self) -> Option<&RadialGraph> {
        match &self.shape {
            Shape::Graph(g) => Some(g),
            Shape::Curve(_) => None,
        }
    }

    /// Validated curve from chart points. The curve is reoriented to run
    /// counterclockwise around its enclosed region and, in the homogeneous
    /// model, projected onto the base sphere.
    pub fn curve(model: ModelSpace, points: Vec<Vec3>) -> Result<Self, SurfaceError> {
        if points.len() < MIN_CURVE_VERTICES {
            return Err(SurfaceError::TooFewVertices(format!(
                "curve has {} vertices, need at least {MIN_CURVE_VERTICES}",
                points.len()
            )));
        }
        let base_radius = match model {
            ModelSpace::Flat { dim: 2 } => None,
            ModelSpace::HomogeneousSphereBase { .. } => Some(model.base_radius().ok_or_else(
                || SurfaceError::ModelMismatch("homogeneous base with a = 0 is flat".into()),
            )?),
            other => {
                return Err(SurfaceError::ModelMismatch(format!(
                    "curves need a two-dimensional base, got {other:?}"
                )))
            }
        };
        let mut points = match base_radius {
            None => points.into_iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect(),
            Some(r) => points.into_iter().map(|p| p.normalize() * r).collect::<Vec<_>>(),
        };
        check_simple(&points, base_radius)?;
        if signed_turning(&points, base_radius) < 0.0 {
            points.reverse();
        }
        let ids = (0..points.len() as u32).collect();
        Ok(DiscreteHypersurface {
            model,
            shape: Shape::Curve(Curve {
                points,
                ids,
                base_radius,
            }),
        })
    }

    /// Validated radial graph from grid values (row-major, poles included).
    pub fn radial_graph(
        model: ModelSpace,
        n_theta: usize,
        n_phi: usize,
        r: Vec<f64>,
        center: Vec3,
    ) -> Result<Self, SurfaceError> {
        if model != ModelSpace::flat(3) {
            return Err(SurfaceError::ModelMismatch(format!(
                "radial graphs live in flat R³, got {model:?}"
            )));
        }
        if n_theta < MIN_THETA_ROWS || n_phi < MIN_PHI_COLUMNS {
            return Err(SurfaceError::TooFewVertices(format!(
                "grid {n_theta}×{n_phi}, need at least {MIN_THETA_ROWS}×{MIN_PHI_COLUMNS}"
            )));
        }
        if r.len() != n_theta * n_phi {
            return Err(SurfaceError::BadParameters(format!(
                "expected {} radial values, got {}",
                n_theta * n_phi,
                r.len()
            )));
        }
        if let Some((index, &value)) = r
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(SurfaceError::NonPositiveRadius { index, value });
        }
        let mut g = RadialGraph {
            n_theta,
            n_phi,
            r,
            center,
        };
        g.fill_poles();
        Ok(DiscreteHypersurface {
            model,
            shape: Shape::Graph(g),
        })
    }

    /// Radial graph sampled from `radius(θ, φ)`.
    pub fn graph_from_fn(
        n_theta: usize,
        n_phi: usize,
        radius: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, SurfaceError> {
        if n_theta < 2 || n_phi < 1 {
            return Err(SurfaceError::TooFewVertices(format!("{n_theta}×{n_phi}")));
        }
        let dt = PI / (n_theta - 1) as f64;
        let dp = 2.0 * PI / n_phi as f64;
        let r = (0..n_theta)
            .flat_map(|i| (0..n_phi).map(move |j| (i, j)))
            .map(|(i, j)| radius(i as f64 * dt, j as f64 * dp))
            .collect();
        Self::radial_graph(ModelSpace::flat(3), n_theta, n_phi, r, Vec3::zeros())
    }
}

/// Uniform-in-angle circle of radius `r` centred at the origin.
pub fn circle(r: f64, n: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[r])?;
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Vec3::new(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect();
    DiscreteHypersurface::curve(ModelSpace::flat(2), pts)
}

/// Circle whose vertices cluster: angle `t + strength · sin t`, `|strength| < 1`.
pub fn clustered_circle(
    r: f64,
    n: usize,
    strength: f64,
) -> Result<DiscreteHypersurface, SurfaceError> {
    let pts = (0..n)
        .map(|i| {
            let u = 2.0 * PI * i as f64 / n as f64;
            let t = u + strength * u.sin();
            Vec3::new(r * t.cos(), r * t.sin(), 0.0)
        })
        .collect();
    DiscreteHypersurface::curve(ModelSpace::flat(2), pts)
}

/// Ellipse with semi-axes `a` (x) and `b` (y), vertices equally spaced in arclength.
pub fn ellipse(a: f64, b: f64, n: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[a, b])?;
    let pts = equal_arclength(n, |t| Vec3::new(a * t.cos(), b * t.sin(), 0.0));
    DiscreteHypersurface::curve(ModelSpace::flat(2), pts)
}

/// Ellipse sampled uniformly in the angle parameter.
pub fn ellipse_by_parameter(
    a: f64,
    b: f64,
    n: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[a, b])?;
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Vec3::new(a * t.cos(), b * t.sin(), 0.0)
        })
        .collect();
    DiscreteHypersurface::curve(ModelSpace::flat(2), pts)
}

/// Geodesic circle of geodesic radius `rho` around the north pole of the base sphere.
pub fn geodesic_circle(
    model: ModelSpace,
    rho: f64,
    n: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[rho])?;
    let radius = model.base_radius().ok_or_else(|| {
        SurfaceError::ModelMismatch("geodesic circles need the homogeneous base".into())
    })?;
    let alpha = rho / radius;
    if alpha >= PI / 2.0 {
        return Err(SurfaceError::BadParameters(format!(
            "geodesic radius {rho} reaches the equator of a base sphere of radius {radius}"
        )));
    }
    let pts = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            radius * Vec3::new(alpha.sin() * t.cos(), alpha.sin() * t.sin(), alpha.cos())
        })
        .collect();
    DiscreteHypersurface::curve(model, pts)
}

pub fn sphere(r: f64, n_theta: usize, n_phi: usize) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[r])?;
    DiscreteHypersurface::graph_from_fn(n_theta, n_phi, |_, _| r)
}

/// Ellipsoid with semi-axis `polar` along the grid's polar (z) axis and `b`, `c`
/// along x and y.
pub fn ellipsoid(
    polar: f64,
    b: f64,
    c: f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<DiscreteHypersurface, SurfaceError> {
    positive(&[polar, b, c])?;
    DiscreteHypersurface::graph_from_fn(n_theta, n_phi, |t, p| {
        let u = unit_direction(t, p);
        1.0 / ((u.x / b).powi(2) + (u.y / c).powi(2) + (u.z / polar).powi(2)).sqrt()
    })
}

fn positive(params: &[f64]) -> Result<(), SurfaceError> {
    if params.iter().all(|p| p.is_finite() && *p > 0.0) {
        Ok(())
    } else {
        Err(SurfaceError::BadParameters(format!(
            "shape parameters must be positive, got {params:?}"
        )))
    }
}

/// `n` points equally spaced in arclength along the closed curve `f` on `[0, 2π)`.
fn equal_arclength(n: usize, f: impl Fn(f64) -> Vec3) -> Vec<Vec3> {
    const FINE: usize = 1 << 16;
    let mut cumulative = Vec::with_capacity(FINE + 1);
    cumulative.push(0.0);
    let mut prev = f(0.0);
    for k in 1..=FINE {
        let p = f(2.0 * PI * k as f64 / FINE as f64);
        cumulative.push(cumulative[k - 1] + (p - prev).norm());
        prev = p;
    }
    let total = cumulative[FINE];
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let target = total * i as f64 / n as f64;
        while cumulative[k + 1] < target {
            k += 1;
        }
        let frac = (target - cumulative[k]) / (cumulative[k + 1] - cumulative[k]);
        out.push(f(2.0 * PI * (k as f64 + frac) / FINE as f64));
    }
    out
}

// Sum of signed turning about the local "up" direction; positive for
// counterclockwise curves.
fn signed_turning(points: &[Vec3], base_radius: Option<f64>) -> f64 {
    let n = points.len();
    match base_radius {
        None => (0..n)
            .map(|i| {
                let p = points[i];
                let q = points[(i + 1) % n];
                p.x * q.y - q.x * p.y
            })
            .sum(),
        Some(_) => {
            let centroid: Vec3 = points.iter().sum::<Vec3>() / n as f64;
            (0..n)
                .map(|i| points[i].cross(&points[(i + 1) % n]).dot(&centroid))
                .sum()
        }
    }
}

// O(N²) segment intersection test in the chart (gnomonic projection for the
// sphere, which maps geodesics to lines on the hemisphere holding the curve).
fn check_simple(points: &[Vec3], base_radius: Option<f64>) -> Result<(), SurfaceError> {
    let n = points.len();
    let planar: Vec<(f64, f64)> = match base_radius {
        None => points.iter().map(|p| (p.x, p.y)).collect(),
        Some(_) => {
            let c: Vec3 = points.iter().sum::<Vec3>();
            let up = c.try_normalize(1e-300).ok_or_else(|| {
                SurfaceError::BadParameters("curve is not contained in a hemisphere".into())
            })?;
            let e1 = if up.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            let e1 = (e1 - up * up.dot(&e1)).normalize();
            let e2 = up.cross(&e1);
            let mut out = Vec::with_capacity(n);
            for p in points {
                let h = p.dot(&up);
                if h <= 0.0 {
                    return Err(SurfaceError::BadParameters(
                        "curve is not contained in an open hemisphere".into(),
                    ));
                }
                out.push((p.dot(&e1) / h, p.dot(&e2) / h));
            }
            out
        }
    };
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    for i in 0..n {
        let (a, b) = (planar[i], planar[(i + 1) % n]);
        for j in (i + 2)..n {
            if (j + 1) % n == i {
                continue;
            }
            let (c, d) = (planar[j], planar[(j + 1) % n]);
            let d1 = cross(a, b, c);
            let d2 = cross(a, b, d);
            let d3 = cross(c, d, a);
            let d4 = cross(c, d, b);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return Err(SurfaceError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}
