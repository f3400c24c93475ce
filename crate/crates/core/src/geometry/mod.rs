//! Discrete differential geometry of closed hypersurfaces.
//!
//! Conventions: the unit normal `ξ` points into the enclosed region, so a
//! convex hypersurface has positive principal curvatures and `‖H‖ ξ` moves it
//! inward. Curves use circumcircle curvature on three consecutive vertices and
//! arclength-weighted stencils; radial graphs use central differences on the
//! latitude–longitude grid.

pub mod covariant;
pub(crate) mod curve;
pub(crate) mod graph;

use thiserror::Error;

use crate::surface::{DiscreteHypersurface, Shape, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
}

/// Symmetric 2×2 form in coordinate components. Curves use `xx` only.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn inverse(&self) -> Sym2 {
        let d = self.det();
        Sym2::new(self.yy / d, -self.xy / d, self.xx / d)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    /// Eigenvalues of `g⁻¹ self`, ascending.
    pub fn eigen_relative(&self, g: &Sym2) -> [f64; 2] {
        let det_g = g.det();
        let tr = (g.yy * self.xx - 2.0 * g.xy * self.xy + g.xx * self.yy) / det_g;
        let det = self.det() / det_g;
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        [0.5 * tr - disc, 0.5 * tr + disc]
    }

    /// `|self|²` measured with the metric `g`.
    pub fn norm_sq(&self, g: &Sym2) -> f64 {
        let gi = g.inverse();
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        s += gi.get(i, k) * gi.get(j, l) * self.get(i, j) * self.get(k, l);
                    }
                }
            }
        }
        s
    }
}

/// Per-vertex geometric data of a [`DiscreteHypersurface`].
///
/// For curves `principal[v] = [k, k]`; for graphs `principal[v]` holds
/// `λ₁ ≤ λ₂`. Pole rows of a graph carry the mean of the adjacent latitude row
/// and are flagged in `derived`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryField {
    pub n: usize,
    pub positions: Vec<Vec3>,
    pub metric: Vec<Sym2>,
    pub second: Vec<Sym2>,
    pub principal: Vec<[f64; 2]>,
    pub mean: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub area_element: Vec<f64>,
    /// Parameter-space quadrature weight; `Σ area_element · cell_weight` is the volume.
    pub cell_weight: Vec<f64>,
    pub grad_mean: Vec<Vec3>,
    pub grad_mean_norm: Vec<f64>,
    pub lap_mean: Vec<f64>,
    pub a_norm_sq: Vec<f64>,
    pub derived: Vec<bool>,
}

impl GeometryField {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn lambda_min(&self, v: usize) -> f64 {
        self.principal[v][0]
    }

    pub fn lambda_max(&self, v: usize) -> f64 {
        self.principal[v][self.n - 1]
    }

    /// Principal curvatures of vertex `v` as a length-`n` slice.
    pub fn lambdas(&self, v: usize) -> &[f64] {
        &self.principal[v][..self.n]
    }

    pub fn volume(&self) -> f64 {
        self.area_element
            .iter()
            .zip(&self.cell_weight)
            .map(|(a, w)| a * w)
            .sum()
    }

    /// `∫ f dμ` with the field's quadrature.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter()
            .zip(&self.area_element)
            .zip(&self.cell_weight)
            .map(|((f, a), w)| f * a * w)
            .sum()
    }
}

/// Vector field tangent to the hypersurface, with its metric norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub vectors: Vec<Vec3>,
    pub norms: Vec<f64>,
}

pub fn compute_geometry(surface: &DiscreteHypersurface) -> Result<GeometryField, GeometryError> {
    match &surface.shape {
        Shape::Curve(c) => curve::compute(c),
        Shape::Graph(g) => graph::compute(g),
    }
}

pub fn laplace_beltrami(
    surface: &DiscreteHypersurface,
    field: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    check_len(surface, field)?;
    match &surface.shape {
        Shape::Curve(c) => Ok(curve::laplacian(&curve::Local::new(c)?, field)),
        Shape::Graph(g) => Ok(graph::laplacian(g, &graph::Local::new(g)?, field)),
    }
}

pub fn intrinsic_gradient(
    surface: &DiscreteHypersurface,
    field: &[f64],
) -> Result<Gradient, GeometryError> {
    check_len(surface, field)?;
    match &surface.shape {
        Shape::Curve(c) => Ok(curve::gradient(&curve::Local::new(c)?, field)),
        Shape::Graph(g) => Ok(graph::gradient(g, &graph::Local::new(g)?, field)),
    }
}

/// Intrinsic `n`-volume: length for curves, area for graphs.
pub fn total_volume(surface: &DiscreteHypersurface) -> f64 {
    match &surface.shape {
        Shape::Curve(c) => curve::length(c),
        Shape::Graph(g) => graph::area(g),
    }
}

fn check_len(surface: &DiscreteHypersurface, field: &[f64]) -> Result<(), GeometryError> {
    if field.len() != surface.vertex_count() {
        return Err(GeometryError::DegenerateGeometry(format!(
            "field has {} values for {} vertices",
            field.len(),
            surface.vertex_count()
        )));
    }
    Ok(())
}
