//! Covariant derivatives of the second fundamental form on radial graphs.
//!
//! Christoffel symbols come from central differences of the discrete metric,
//! so the discrete connection is metric-compatible up to roundoff. First
//! covariant derivatives are valid on rows `2..=n_theta-3`, second ones on
//! rows `3..=n_theta-4`.

use super::graph::Local;
use super::{GeometryError, Sym2};
use crate::surface::{DiscreteHypersurface, RadialGraph};

type T3 = [[[f64; 2]; 2]; 2];

/// First and second covariant data of a radial graph.
pub struct Covariant {
    pub n_theta: usize,
    pub n_phi: usize,
    /// `|∇A|²` per vertex, zero outside the valid rows.
    pub grad_a_sq: Vec<f64>,
    /// `|Δh - ∇d‖H‖ - ‖H‖ (A²)♯ + |A|² h|_g` per vertex, zero outside the valid rows.
    pub simons_residual: Vec<f64>,
    /// `|Δh|_g`, the scale the Simons residual is measured against.
    pub simons_scale: Vec<f64>,
    pub first_valid: Vec<bool>,
    pub second_valid: Vec<bool>,
}

fn graph_of(surface: &DiscreteHypersurface) -> Result<&RadialGraph, GeometryError> {
    surface.as_graph().ok_or_else(|| {
        GeometryError::DegenerateGeometry("covariant derivatives need a radial graph".into())
    })
}

/// Central difference of a per-vertex quantity along θ (`dir = 0`) or φ (`dir = 1`).
#[inline]
fn central<T: Copy>(
    data: &[T],
    np: usize,
    i: usize,
    j: usize,
    dir: usize,
    step: f64,
    sub: impl Fn(T, T) -> T,
    scale: impl Fn(T, f64) -> T,
) -> T {
    let (a, b) = if dir == 0 {
        (data[(i + 1) * np + j], data[(i - 1) * np + j])
    } else {
        (data[i * np + (j + 1) % np], data[i * np + (j + np - 1) % np])
    };
    scale(sub(a, b), 0.5 / step)
}

fn sub3(a: T3, b: T3) -> T3 {
    let mut o = a;
    for k in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                o[k][i][j] -= b[k][i][j];
            }
        }
    }
    o
}

fn scale3(a: T3, s: f64) -> T3 {
    let mut o = a;
    o.iter_mut().flatten().flatten().for_each(|x| *x *= s);
    o
}

/// `Γ^m_ij` indexed `[m][i][j]` from the metric and its partials `dg[l] = ∂_l g`.
fn christoffel(g: &Sym2, dg: &[Sym2; 2]) -> T3 {
    let gi = g.inverse();
    let mut out = [[[0.0; 2]; 2]; 2];
    for m in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                let mut s = 0.0;
                for l in 0..2 {
                    s += gi.get(m, l)
                        * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j));
                }
                out[m][i][j] = 0.5 * s;
            }
        }
    }
    out
}

pub fn covariant(surface: &DiscreteHypersurface) -> Result<Covariant, GeometryError> {
    let graph = graph_of(surface)?;
    let l = Local::new(graph)?;
    let (nt, np, dt, dp) = (l.nt, l.np, l.dth, l.dph);
    let steps = [dt, dp];
    let n = nt * np;
    let metric: Vec<Sym2> = l.v.iter().map(|v| v.g).collect();
    let second: Vec<Sym2> = l.v.iter().map(|v| v.h).collect();
    let mean: Vec<f64> = l.v.iter().map(|v| v.mean).collect();
    let sub_s = |a: Sym2, b: Sym2| a.add(&b.scale(-1.0));
    let scale_s = |a: Sym2, s: f64| a.scale(s);

    let mut gamma = vec![[[[0.0; 2]; 2]; 2]; n];
    let mut nabla_h = vec![[[[0.0; 2]; 2]; 2]; n];
    let mut grad_a_sq = vec![0.0; n];
    let mut first_valid = vec![false; n];
    for i in 2..nt - 2 {
        for j in 0..np {
            let k = i * np + j;
            let dg = [0, 1].map(|d| central(&metric, np, i, j, d, steps[d], sub_s, scale_s));
            let dh = [0, 1].map(|d| central(&second, np, i, j, d, steps[d], sub_s, scale_s));
            let gm = christoffel(&metric[k], &dg);
            let h = &second[k];
            let mut t = [[[0.0; 2]; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let mut v = dh[a].get(b, c);
                        for m in 0..2 {
                            v -= gm[m][a][b] * h.get(m, c) + gm[m][a][c] * h.get(b, m);
                        }
                        t[a][b][c] = v;
                    }
                }
            }
            let gi = metric[k].inverse();
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        for x in 0..2 {
                            for y in 0..2 {
                                for z in 0..2 {
                                    s += gi.get(a, x) * gi.get(b, y) * gi.get(c, z)
                                        * t[a][b][c]
                                        * t[x][y][z];
                                }
                            }
                        }
                    }
                }
            }
            gamma[k] = gm;
            nabla_h[k] = t;
            grad_a_sq[k] = s;
            first_valid[k] = true;
        }
    }

    let mut simons_residual = vec![0.0; n];
    let mut simons_scale = vec![0.0; n];
    let mut second_valid = vec![false; n];
    let hv = |i: usize, j: usize| mean[i * np + (j % np)];
    for i in 3..nt - 3 {
        for j in 0..np {
            let k = i * np + j;
            let (jm, jp) = ((j + np - 1) % np, j + 1);
            let gm = &gamma[k];
            let t = &nabla_h[k];
            let gi = metric[k].inverse();
            let h = &second[k];
            // ∂_l T_{abc}
            let dt3 = [0, 1].map(|d| central(&nabla_h, np, i, j, d, steps[d], sub3, scale3));
            let mut lap = [[0.0; 2]; 2];
            for b in 0..2 {
                for c in 0..2 {
                    let mut s = 0.0;
                    for ll in 0..2 {
                        for a in 0..2 {
                            let mut v = dt3[ll][a][b][c];
                            for m in 0..2 {
                                v -= gm[m][ll][a] * t[m][b][c]
                                    + gm[m][ll][b] * t[a][m][c]
                                    + gm[m][ll][c] * t[a][b][m];
                            }
                            s += gi.get(ll, a) * v;
                        }
                    }
                    lap[b][c] = s;
                }
            }
            let h0 = hv(i, j);
            let d1 = [
                (hv(i + 1, j) - hv(i - 1, j)) / (2.0 * dt),
                (hv(i, jp) - hv(i, jm)) / (2.0 * dp),
            ];
            let d2 = [
                [
                    (hv(i + 1, j) - 2.0 * h0 + hv(i - 1, j)) / (dt * dt),
                    (hv(i + 1, jp) - hv(i + 1, jm) - hv(i - 1, jp) + hv(i - 1, jm))
                        / (4.0 * dt * dp),
                ],
                [
                    0.0,
                    (hv(i, jp) - 2.0 * h0 + hv(i, jm)) / (dp * dp),
                ],
            ];
            let d2 = |a: usize, b: usize| if a <= b { d2[a][b] } else { d2[b][a] };
            let a_sq = {
                let hh = |a: usize, b: usize| {
                    (0..2)
                        .flat_map(|x| (0..2).map(move |y| (x, y)))
                        .map(|(x, y)| h.get(a, x) * gi.get(x, y) * h.get(y, b))
                        .sum::<f64>()
                };
                Sym2::new(hh(0, 0), hh(0, 1), hh(1, 1))
            };
            let norm_a = a_sq.get(0, 0) * gi.xx + 2.0 * a_sq.get(0, 1) * gi.xy + a_sq.get(1, 1) * gi.yy;
            let entry = |b: usize, c: usize| {
                let hess = d2(b, c) - (0..2).map(|m| gm[m][b][c] * d1[m]).sum::<f64>();
                lap[b][c] - hess - h0 * a_sq.get(b, c) + norm_a * h.get(b, c)
            };
            let lap_s = Sym2::new(lap[0][0], 0.5 * (lap[0][1] + lap[1][0]), lap[1][1]);
            let res = Sym2::new(entry(0, 0), 0.5 * (entry(0, 1) + entry(1, 0)), entry(1, 1));
            simons_residual[k] = res.norm_sq(&metric[k]).max(0.0).sqrt();
            simons_scale[k] = lap_s.norm_sq(&metric[k]).max(0.0).sqrt();
            second_valid[k] = true;
        }
    }

    Ok(Covariant {
        n_theta: nt,
        n_phi: np,
        grad_a_sq,
        simons_residual,
        simons_scale,
        first_valid,
        second_valid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{ellipsoid, sphere};

    #[test]
    fn sphere_is_parallel_and_satisfies_identity() {
        let s = sphere(1.3, 32, 64).unwrap();
        let c = covariant(&s).unwrap();
        let max_grad = c.grad_a_sq.iter().cloned().fold(0.0, f64::max);
        let max_res = c.simons_residual.iter().cloned().fold(0.0, f64::max);
        assert!(max_grad < 1e-20, "{max_grad}");
        assert!(max_res < 1e-9, "{max_res}");
    }

    #[test]
    fn ellipsoid_has_nonzero_gradient() {
        let s = ellipsoid(2.0, 1.0, 1.0, 32, 64).unwrap();
        let c = covariant(&s).unwrap();
        assert!(c.grad_a_sq.iter().cloned().fold(0.0, f64::max) > 1e-3);
    }
}
