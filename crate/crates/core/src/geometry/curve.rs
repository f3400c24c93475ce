use std::f64::consts::PI;

use super::{GeometryError, GeometryField, Gradient, Sym2};
use crate::surface::{Curve, Vec3};

/// Per-vertex stencil data of a cyclic polyline.
pub(crate) struct Local {
    pub pos: Vec<Vec3>,
    /// Length of the edge ending at the vertex.
    pub l_minus: Vec<f64>,
    /// Length of the edge starting at the vertex.
    pub l_plus: Vec<f64>,
    /// Signed geodesic curvature, positive towards the enclosed region.
    pub k: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub tangent: Vec<Vec3>,
}

/// Edge lengths: chords in the plane. On the base sphere each edge is
/// measured along the circles through its endpoints' vertex triples (averaged),
/// which is exact for geodesic and for small circles.
pub(crate) fn edge_lengths(c: &Curve) -> Vec<f64> {
    let n = c.points.len();
    let pts = &c.points;
    let chords = (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm());
    if c.base_radius.is_none() {
        return chords.collect();
    }
    let kappa: Vec<f64> = (0..n)
        .map(|i| circumcircle_curvature(&pts[(i + n - 1) % n], &pts[i], &pts[(i + 1) % n]).norm())
        .collect();
    let arc = |chord: f64, k: f64| {
        let s = 0.5 * k * chord;
        if s < 1e-8 {
            chord
        } else {
            2.0 * s.min(1.0).asin() / k
        }
    };
    chords
        .enumerate()
        .map(|(i, ch)| 0.5 * (arc(ch, kappa[i]) + arc(ch, kappa[(i + 1) % n])))
        .collect()
}

pub(crate) fn length(c: &Curve) -> f64 {
    edge_lengths(c).iter().sum()
}

/// Curvature vector of the circle through `p`, `x`, `q`, at `x`.
#[inline]
pub(crate) fn circumcircle_curvature(p: &Vec3, x: &Vec3, q: &Vec3) -> Vec3 {
    let a = p - x;
    let b = q - x;
    let u = a.norm_squared() * b - b.norm_squared() * a;
    let w = u.cross(&a.cross(&b));
    let uu = u.norm_squared();
    if uu == 0.0 {
        Vec3::zeros()
    } else {
        2.0 * w / uu
    }
}

impl Local {
    pub fn new(c: &Curve) -> Result<Self, GeometryError> {
        let n = c.points.len();
        let pts = &c.points;
        let edges = edge_lengths(c);
        let scale = edges.iter().sum::<f64>() / n as f64;
        if let Some(i) = edges.iter().position(|e| !(*e > 1e-12 * scale)) {
            return Err(GeometryError::DegenerateGeometry(format!(
                "duplicate adjacent vertices {i} and {}",
                (i + 1) % n
            )));
        }
        let mut k = Vec::with_capacity(n);
        let mut normal = Vec::with_capacity(n);
        let mut tangent = Vec::with_capacity(n);
        let mut l_minus = Vec::with_capacity(n);
        for i in 0..n {
            let prev = &pts[(i + n - 1) % n];
            let next = &pts[(i + 1) % n];
            let x = &pts[i];
            let up = match c.base_radius {
                None => Vec3::z(),
                Some(_) => x.normalize(),
            };
            let mut kv = circumcircle_curvature(prev, x, next);
            if c.base_radius.is_some() {
                kv -= up * kv.dot(&up);
            }
            let chord = next - prev;
            let chord_t = (chord - up * chord.dot(&up)).normalize();
            let left = up.cross(&chord_t);
            let kn = kv.norm();
            let sign = if kv.dot(&left) < 0.0 { -1.0 } else { 1.0 };
            let xi = if kn > 1e-9 / scale {
                kv * (sign / kn)
            } else {
                left
            };
            k.push(sign * kn);
            tangent.push(xi.cross(&up));
            normal.push(xi);
            l_minus.push(edges[(i + n - 1) % n]);
        }
        Ok(Local {
            pos: pts.clone(),
            l_minus,
            l_plus: edges,
            k,
            normal,
            tangent,
        })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    /// Half the lengths of the two adjacent edges.
    pub fn dual_length(&self, i: usize) -> f64 {
        0.5 * (self.l_minus[i] + self.l_plus[i])
    }
}

pub(crate) fn laplacian(l: &Local, f: &[f64]) -> Vec<f64> {
    let n = l.len();
    (0..n)
        .map(|i| {
            let (hm, hp) = (l.l_minus[i], l.l_plus[i]);
            let fm = f[(i + n - 1) % n];
            let fp = f[(i + 1) % n];
            2.0 * ((fp - f[i]) / hp - (f[i] - fm) / hm) / (hp + hm)
        })
        .collect()
}

/// Arclength derivative by the non-uniform three-point formula.
pub(crate) fn derivative(l: &Local, f: &[f64]) -> Vec<f64> {
    let n = l.len();
    (0..n)
        .map(|i| {
            let (hm, hp) = (l.l_minus[i], l.l_plus[i]);
            let fm = f[(i + n - 1) % n];
            let fp = f[(i + 1) % n];
            (hm * hm * (fp - f[i]) + hp * hp * (f[i] - fm)) / (hm * hp * (hm + hp))
        })
        .collect()
}

pub(crate) fn gradient(l: &Local, f: &[f64]) -> Gradient {
    let d = derivative(l, f);
    Gradient {
        vectors: d.iter().zip(&l.tangent).map(|(d, t)| t * *d).collect(),
        norms: d.iter().map(|d| d.abs()).collect(),
    }
}

pub(crate) fn compute(c: &Curve) -> Result<GeometryField, GeometryError> {
    let l = Local::new(c)?;
    let n = l.len();
    let du = 2.0 * PI / n as f64;
    let metric: Vec<Sym2> = (0..n)
        .map(|i| {
            let s = l.dual_length(i) / du;
            Sym2::new(s * s, 0.0, 0.0)
        })
        .collect();
    let second = metric
        .iter()
        .zip(&l.k)
        .map(|(g, k)| Sym2::new(k * g.xx, 0.0, 0.0))
        .collect();
    let grad = gradient(&l, &l.k);
    Ok(GeometryField {
        n: 1,
        positions: l.pos.clone(),
        second,
        principal: l.k.iter().map(|k| [*k, *k]).collect(),
        mean: l.k.clone(),
        normal: l.normal.clone(),
        area_element: (0..n).map(|i| l.dual_length(i) / du).collect(),
        cell_weight: vec![du; n],
        lap_mean: laplacian(&l, &l.k),
        grad_mean: grad.vectors,
        grad_mean_norm: grad.norms,
        a_norm_sq: l.k.iter().map(|k| k * k).collect(),
        derived: vec![false; n],
        metric,
    })
}
