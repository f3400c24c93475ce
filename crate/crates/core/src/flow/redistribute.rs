//! Tangential respacing of curves to uniform arclength.
//!
//! Each edge is replaced by the average of the two circular arcs through its
//! neighbouring vertex triples, so circles (and geodesic circles of the base
//! sphere) are reproduced exactly. Vertex 0 is kept fixed.

use crate::geometry::curve::circumcircle_curvature;
use crate::surface::{Curve, DiscreteHypersurface, Shape, Vec3};

/// Arc from `p` to `q` on the circle with curvature vector `kv` (taken at
/// either endpoint): returns the arc length and a point evaluator in `[0, 1]`.
struct Arc {
    p: Vec3,
    mid: Vec3,
    e: Vec3,
    n: Vec3,
    half_chord: f64,
    alpha: f64,
    length: f64,
}

impl Arc {
    fn new(p: Vec3, q: Vec3, kv: Vec3) -> Arc {
        let chord = q - p;
        let len = chord.norm();
        let e = chord / len;
        let perp = kv - e * kv.dot(&e);
        let kappa = kv.norm();
        let alpha = (0.5 * kappa * len).min(1.0).asin();
        let n = perp.try_normalize(0.0).unwrap_or_else(Vec3::zeros);
        let length = if alpha > 1e-12 { 2.0 * alpha / kappa } else { len };
        Arc {
            p,
            mid: 0.5 * (p + q),
            e,
            n,
            half_chord: 0.5 * len,
            alpha,
            length,
        }
    }

    fn at(&self, tau: f64) -> Vec3 {
        if self.alpha <= 1e-12 {
            return self.p + (2.0 * self.half_chord * tau) * self.e;
        }
        let beta = self.alpha * (2.0 * tau - 1.0);
        let scale = self.half_chord / self.alpha.sin();
        self.mid + self.e * (beta.sin() * scale) + self.n * ((self.alpha.cos() - beta.cos()) * scale)
    }
}

/// Respace a curve's vertices to uniform arclength. Graphs are returned unchanged.
pub fn redistribute(surface: &DiscreteHypersurface) -> DiscreteHypersurface {
    let c = match &surface.shape {
        Shape::Curve(c) => c,
        Shape::Graph(_) => return surface.clone(),
    };
    let pts = &c.points;
    let n = pts.len();
    let kv: Vec<Vec3> = (0..n)
        .map(|i| circumcircle_curvature(&pts[(i + n - 1) % n], &pts[i], &pts[(i + 1) % n]))
        .collect();
    let arcs: Vec<(Arc, Arc)> = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            (Arc::new(pts[i], pts[j], kv[i]), Arc::new(pts[i], pts[j], kv[j]))
        })
        .collect();
    let lengths: Vec<f64> = arcs.iter().map(|(a, b)| 0.5 * (a.length + b.length)).collect();
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(n);
    out.push(pts[0]);
    let (mut edge, mut start) = (0usize, 0.0);
    for k in 1..n {
        let target = total * k as f64 / n as f64;
        while edge + 1 < n && start + lengths[edge] < target {
            start += lengths[edge];
            edge += 1;
        }
        let tau = ((target - start) / lengths[edge]).clamp(0.0, 1.0);
        let (a, b) = &arcs[edge];
        let mut p = 0.5 * (a.at(tau) + b.at(tau));
        if let Some(r) = c.base_radius {
            p = p.normalize() * r;
        }
        out.push(p);
    }
    DiscreteHypersurface {
        model: surface.model,
        shape: Shape::Curve(Curve {
            points: out,
            ids: c.ids.clone(),
            base_radius: c.base_radius,
        }),
    }
}

/// Ratio of the longest to the shortest edge.
pub fn spacing_ratio(c: &Curve) -> f64 {
    let n = c.points.len();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = (c.points[(i + 1) % n] - c.points[i]).norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    hi / lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{circle, clustered_circle, ellipse_by_parameter};

    #[test]
    fn uniform_circle_is_fixed() {
        let s = circle(1.7, 64).unwrap();
        let r = redistribute(&s);
        let (a, b) = (s.as_curve().unwrap(), r.as_curve().unwrap());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn clustered_circle_becomes_uniform_on_the_same_circle() {
        let s = clustered_circle(1.0, 128, 0.4).unwrap();
        assert!(spacing_ratio(s.as_curve().unwrap()) > 2.0);
        let r = redistribute(&s);
        let c = r.as_curve().unwrap();
        assert!(spacing_ratio(c) < 1.0 + 1e-9);
        for p in &c.points {
            assert!((p.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ellipse_spacing_becomes_uniform() {
        let s = ellipse_by_parameter(2.0, 1.0, 256).unwrap();
        let r = redistribute(&s);
        assert!(spacing_ratio(r.as_curve().unwrap()) <= 1.01);
    }
}
