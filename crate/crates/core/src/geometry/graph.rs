use rayon::prelude::*;

use super::{GeometryError, GeometryField, Gradient, Sym2};
use crate::surface::{RadialGraph, Vec3};

/// Stencil data at one grid vertex. In pole rows every field except the
/// position is the mean over the adjacent latitude row.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Vertex {
    pub pos: Vec3,
    /// Coordinate tangent vectors `∂X/∂θ`, `∂X/∂φ` (zero in pole rows).
    pub xt: Vec3,
    pub xp: Vec3,
    pub g: Sym2,
    pub h: Sym2,
    pub w: f64,
    /// Cosine between the inward normal and the inward radial direction.
    pub cosang: f64,
    pub sqrt_det: f64,
    pub principal: [f64; 2],
    pub mean: f64,
    pub normal: Vec3,
}

pub(crate) struct Local {
    pub v: Vec<Vertex>,
    pub nt: usize,
    pub np: usize,
    pub dth: f64,
    pub dph: f64,
}

/// Sines and cosines of the grid angles.
pub(crate) struct Trig {
    pub st: Vec<f64>,
    pub ct: Vec<f64>,
    pub sp: Vec<f64>,
    pub cp: Vec<f64>,
}

impl Trig {
    pub fn new(g: &RadialGraph) -> Self {
        let (st, ct) = (0..g.n_theta).map(|i| g.theta(i).sin_cos()).unzip();
        let (sp, cp) = (0..g.n_phi).map(|j| g.phi(j).sin_cos()).unzip();
        Trig { st, ct, sp, cp }
    }
}

impl Local {
    pub fn new(g: &RadialGraph) -> Result<Self, GeometryError> {
        let (nt, np) = (g.n_theta, g.n_phi);
        let trig = Trig::new(g);
        let rows: Vec<Vec<Vertex>> = (1..nt - 1)
            .into_par_iter()
            .map(|i| (0..np).map(|j| interior_vertex(g, &trig, i, j)).collect())
            .collect();
        let north = pole_vertex(g, &rows[0], true);
        let south = pole_vertex(g, &rows[nt - 3], false);
        let mut v = Vec::with_capacity(nt * np);
        v.extend(std::iter::repeat_n(north, np));
        for row in rows {
            v.extend(row);
        }
        v.extend(std::iter::repeat_n(south, np));
        if let Some(k) = v.iter().position(|x| !(x.sqrt_det > 0.0)) {
            return Err(GeometryError::DegenerateGeometry(format!(
                "area element {} at vertex {k}",
                v[k].sqrt_det
            )));
        }
        Ok(Local {
            v,
            nt,
            np,
            dth: g.d_theta(),
            dph: g.d_phi(),
        })
    }
}

/// Radial derivatives `(r_θ, r_φ, r_θθ, r_θφ, r_φφ)` at an interior vertex.
#[inline]
pub(crate) fn radial_derivatives(g: &RadialGraph, i: usize, j: usize) -> [f64; 5] {
    let np = g.n_phi;
    let (dt, dp) = (g.d_theta(), g.d_phi());
    let (jm, jp) = ((j + np - 1) % np, (j + 1) % np);
    let r = |i: usize, j: usize| g.r[i * np + j];
    let c = r(i, j);
    [
        (r(i + 1, j) - r(i - 1, j)) / (2.0 * dt),
        (r(i, jp) - r(i, jm)) / (2.0 * dp),
        (r(i + 1, j) - 2.0 * c + r(i - 1, j)) / (dt * dt),
        (r(i + 1, jp) - r(i + 1, jm) - r(i - 1, jp) + r(i - 1, jm)) / (4.0 * dt * dp),
        (r(i, jp) - 2.0 * c + r(i, jm)) / (dp * dp),
    ]
}

fn interior_vertex(g: &RadialGraph, trig: &Trig, i: usize, j: usize) -> Vertex {
    let r = g.r[g.idx(i, j)];
    let [rt, rp, rtt, rtp, rpp] = radial_derivatives(g, i, j);
    let (s, c) = (trig.st[i], trig.ct[i]);
    let (sp, cp) = (trig.sp[j], trig.cp[j]);
    let u = Vec3::new(s * cp, s * sp, c);
    let e_t = Vec3::new(c * cp, c * sp, -s);
    let e_p = Vec3::new(-sp, cp, 0.0);

    let w = (r * r + rt * rt + rp * rp / (s * s)).sqrt();
    let metric = Sym2::new(rt * rt + r * r, rt * rp, rp * rp + r * r * s * s);
    let second = Sym2::new(
        (r * r + 2.0 * rt * rt - r * rtt) / w,
        (2.0 * rt * rp + r * c * rp / s - r * rtp) / w,
        (r * r * s * s + 2.0 * rp * rp - r * rpp - r * s * c * rt) / w,
    );
    let principal = second.eigen_relative(&metric);
    let outward = (r * u - rt * e_t - (rp / s) * e_p) / w;
    Vertex {
        pos: g.center + r * u,
        xt: rt * u + r * e_t,
        xp: rp * u + r * s * e_p,
        g: metric,
        h: second,
        w,
        cosang: r / w,
        sqrt_det: metric.det().sqrt(),
        principal,
        mean: principal[0] + principal[1],
        normal: -outward,
    }
}

fn pole_vertex(g: &RadialGraph, row: &[Vertex], north: bool) -> Vertex {
    let m = 1.0 / row.len() as f64;
    let mut p = Vertex::default();
    for v in row {
        p.g = p.g.add(&v.g.scale(m));
        p.h = p.h.add(&v.h.scale(m));
        p.w += v.w * m;
        p.cosang += v.cosang * m;
        p.sqrt_det += v.sqrt_det * m;
        p.principal[0] += v.principal[0] * m;
        p.principal[1] += v.principal[1] * m;
        p.mean += v.mean * m;
        p.normal += v.normal;
    }
    p.normal = p.normal.normalize();
    let (i, z) = if north {
        (0, 1.0)
    } else {
        (g.n_theta - 1, -1.0)
    };
    p.pos = g.center + g.r[g.idx(i, 0)] * Vec3::new(0.0, 0.0, z);
    p
}

/// Values of `f` with both pole rows replaced by the extrapolated ring value.
fn with_pole_values(l: &Local, f: &[f64]) -> Vec<f64> {
    let mut f = f.to_vec();
    crate::surface::fill_pole_rows(&mut f, l.nt, l.np);
    f
}

/// Copy the mean of the adjacent latitude row into each pole row.
pub(crate) fn average_into_poles(out: &mut [f64], nt: usize, np: usize) {
    let north = out[np..2 * np].iter().sum::<f64>() / np as f64;
    let south = out[(nt - 2) * np..(nt - 1) * np].iter().sum::<f64>() / np as f64;
    out[..np].fill(north);
    out[(nt - 1) * np..].fill(south);
}

/// Divergence-form Laplace–Beltrami operator with metric weights.
pub(crate) fn laplacian(g: &RadialGraph, l: &Local, f: &[f64]) -> Vec<f64> {
    let (nt, np, dt, dp) = (l.nt, l.np, l.dth, l.dph);
    let f = with_pole_values(l, f);
    // √g g^{θθ}, √g g^{θφ}, √g g^{φφ}; the first two vanish at the poles
    let coef: Vec<[f64; 3]> = (0..nt * np)
        .map(|k| {
            let i = k / np;
            if g.is_pole_row(i) {
                return [0.0, 0.0, 0.0];
            }
            let v = &l.v[k];
            [v.g.yy / v.sqrt_det, -v.g.xy / v.sqrt_det, v.g.xx / v.sqrt_det]
        })
        .collect();
    let at = |i: usize, j: usize| f[i * np + j];
    let mut out = vec![0.0; nt * np];
    out[np..(nt - 1) * np]
        .par_chunks_mut(np)
        .enumerate()
        .for_each(|(row, out_row)| {
            let i = row + 1;
            for j in 0..np {
                let (jm, jp) = ((j + np - 1) % np, (j + 1) % np);
                let k = i * np + j;
                let c = &coef;
                let f0 = at(i, j);
                let a_up = 0.5 * (c[k][0] + c[k + np][0]);
                let a_dn = 0.5 * (c[k][0] + c[k - np][0]);
                let b_r = 0.5 * (c[k][2] + c[i * np + jp][2]);
                let b_l = 0.5 * (c[k][2] + c[i * np + jm][2]);
                let theta_part = (a_up * (at(i + 1, j) - f0) - a_dn * (f0 - at(i - 1, j))) / (dt * dt);
                let phi_part = (b_r * (at(i, jp) - f0) - b_l * (f0 - at(i, jm))) / (dp * dp);
                // ∂_θ(a^{θφ} ∂_φ f) + ∂_φ(a^{θφ} ∂_θ f)
                let fp = |i: usize| (at(i, jp) - at(i, jm)) / (2.0 * dp);
                let q_up = c[k + np][1] * fp(i + 1);
                let q_dn = c[k - np][1] * fp(i - 1);
                let ft = |j: usize| (at(i + 1, j) - at(i - 1, j)) / (2.0 * dt);
                let q_r = c[i * np + jp][1] * ft(jp);
                let q_l = c[i * np + jm][1] * ft(jm);
                let cross = (q_up - q_dn) / (2.0 * dt) + (q_r - q_l) / (2.0 * dp);
                out_row[j] = (theta_part + phi_part + cross) / l.v[k].sqrt_det;
            }
        });
    average_into_poles(&mut out, nt, np);
    out
}

/// Coordinate partials `(∂_θ f, ∂_φ f)` by central differences, using the
/// extrapolated pole value for the rows adjacent to the poles. Pole rows are zero.
pub(crate) fn partials(l: &Local, f: &[f64]) -> Vec<[f64; 2]> {
    let (nt, np, dt, dp) = (l.nt, l.np, l.dth, l.dph);
    let f = with_pole_values(l, f);
    let mut out = vec![[0.0; 2]; nt * np];
    for i in 1..nt - 1 {
        for j in 0..np {
            let (jm, jp) = ((j + np - 1) % np, (j + 1) % np);
            out[i * np + j] = [
                (f[(i + 1) * np + j] - f[(i - 1) * np + j]) / (2.0 * dt),
                (f[i * np + jp] - f[i * np + jm]) / (2.0 * dp),
            ];
        }
    }
    out
}

pub(crate) fn gradient(_g: &RadialGraph, l: &Local, f: &[f64]) -> Gradient {
    let (nt, np) = (l.nt, l.np);
    let d = partials(l, f);
    let mut vectors = vec![Vec3::zeros(); nt * np];
    let mut norms = vec![0.0; nt * np];
    for k in np..(nt - 1) * np {
        let v = &l.v[k];
        let gi = v.g.inverse();
        let up_t = gi.xx * d[k][0] + gi.xy * d[k][1];
        let up_p = gi.xy * d[k][0] + gi.yy * d[k][1];
        vectors[k] = up_t * v.xt + up_p * v.xp;
        norms[k] = (up_t * d[k][0] + up_p * d[k][1]).max(0.0).sqrt();
    }
    average_into_poles(&mut norms, nt, np);
    for pole in [0, nt - 1] {
        let src = if pole == 0 { 1 } else { nt - 2 };
        let mean: Vec3 = vectors[src * np..(src + 1) * np].iter().sum::<Vec3>() / np as f64;
        vectors[pole * np..(pole + 1) * np].fill(mean);
    }
    Gradient { vectors, norms }
}

pub(crate) fn area(g: &RadialGraph) -> f64 {
    let trig = Trig::new(g);
    let (dt, dp) = (g.d_theta(), g.d_phi());
    let mut total = 0.0;
    for i in 1..g.n_theta - 1 {
        for j in 0..g.n_phi {
            let r = g.r[g.idx(i, j)];
            let [rt, rp, ..] = radial_derivatives(g, i, j);
            let s = trig.st[i];
            let metric = Sym2::new(rt * rt + r * r, rt * rp, rp * rp + r * r * s * s);
            total += metric.det().sqrt() * dt * dp;
        }
    }
    total
}

pub(crate) fn compute(g: &RadialGraph) -> Result<GeometryField, GeometryError> {
    let l = Local::new(g)?;
    let (nt, np) = (l.nt, l.np);
    let mean: Vec<f64> = l.v.iter().map(|v| v.mean).collect();
    let grad = gradient(g, &l, &mean);
    let lap = laplacian(g, &l, &mean);
    let w = l.dth * l.dph;
    Ok(GeometryField {
        n: 2,
        positions: l.v.iter().map(|v| v.pos).collect(),
        metric: l.v.iter().map(|v| v.g).collect(),
        second: l.v.iter().map(|v| v.h).collect(),
        principal: l.v.iter().map(|v| v.principal).collect(),
        normal: l.v.iter().map(|v| v.normal).collect(),
        area_element: l.v.iter().map(|v| v.sqrt_det).collect(),
        cell_weight: (0..nt * np)
            .map(|k| if g.is_pole_row(k / np) { 0.0 } else { w })
            .collect(),
        grad_mean: grad.vectors,
        grad_mean_norm: grad.norms,
        lap_mean: lap,
        a_norm_sq: l
            .v
            .iter()
            .map(|v| v.principal[0].powi(2) + v.principal[1].powi(2))
            .collect(),
        derived: (0..nt * np).map(|k| g.is_pole_row(k / np)).collect(),
        mean,
    })
}
