//! Maximum-principle harness: explicit reaction–diffusion–drift runs on a
//! frozen background surface.
//!
//! The background is a weighted graph with vertex areas and nonnegative edge
//! conductances, so the discrete Laplacian is an M-matrix and an explicit step
//! under the diffusion limit is a convex combination of neighbouring values.
//! Drift is upwinded for the same reason. Tensors are stored in an
//! orthonormal tangent frame per vertex and carried between neighbours by the
//! rotation closest to the frame overlap matrix.

use nalgebra::{Matrix2, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::VerifyError;
use crate::geometry::{compute_geometry, graph};
use crate::surface::{DiscreteHypersurface, Shape, Vec3};

pub type M2 = Matrix2<f64>;

/// Value of a map of polynomial type: rank 0 or a symmetric 2-tensor in an
/// orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Scalar(f64),
    Tensor(M2),
}

impl Value {
    pub fn rank(&self) -> u8 {
        match self {
            Value::Scalar(_) => 0,
            Value::Tensor(_) => 2,
        }
    }
}

/// Building blocks of maps of polynomial type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    /// `k`-fold product; `Power(0)` is the unit of the input's rank.
    Power(u32),
    /// `S ↦ B S`
    TensorLeft(M2),
    /// `S ↦ S B`
    TensorRight(M2),
    /// `ρ ↦ ρ B`
    Outer(M2),
    /// Metric trace `S ↦ tr S`.
    Trace,
    /// Full contraction with `B`: `S ↦ tr(B S)`.
    Contract(M2),
}

impl Primitive {
    fn output_rank(&self, input: u8) -> Option<u8> {
        match (self, input) {
            (Primitive::Power(_), r) => Some(r),
            (Primitive::TensorLeft(_) | Primitive::TensorRight(_), 2) => Some(2),
            (Primitive::Outer(_), 0) => Some(2),
            (Primitive::Trace | Primitive::Contract(_), 2) => Some(0),
            _ => None,
        }
    }

    fn apply(&self, v: Value) -> Value {
        match (self, v) {
            (Primitive::Power(k), Value::Scalar(x)) => Value::Scalar(x.powi(*k as i32)),
            (Primitive::Power(k), Value::Tensor(s)) => Value::Tensor(s.pow(*k)),
            (Primitive::TensorLeft(b), Value::Tensor(s)) => Value::Tensor(b * s),
            (Primitive::TensorRight(b), Value::Tensor(s)) => Value::Tensor(s * b),
            (Primitive::Outer(b), Value::Scalar(x)) => Value::Tensor(b * x),
            (Primitive::Trace, Value::Tensor(s)) => Value::Scalar(s.trace()),
            (Primitive::Contract(b), Value::Tensor(s)) => Value::Scalar((b * s).trace()),
            _ => unreachable!("composition is type-checked on construction"),
        }
    }
}

/// `coeff · (p_k ∘ … ∘ p_1)(input)`
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub chain: Vec<Primitive>,
}

/// Sum of composed primitive maps from rank `input_rank` to `output_rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTypeMap {
    pub input_rank: u8,
    pub output_rank: u8,
    pub terms: Vec<Term>,
}

impl PolynomialTypeMap {
    pub fn new(input_rank: u8, output_rank: u8, terms: Vec<Term>) -> Result<Self, VerifyError> {
        for (t, term) in terms.iter().enumerate() {
            let mut rank = input_rank;
            for (k, p) in term.chain.iter().enumerate() {
                rank = p.output_rank(rank).ok_or_else(|| {
                    VerifyError::IllTypedMap(format!(
                        "term {t}, step {k}: {p:?} cannot take rank {rank}"
                    ))
                })?;
            }
            if rank != output_rank {
                return Err(VerifyError::IllTypedMap(format!(
                    "term {t} has rank {rank}, expected {output_rank}"
                )));
            }
        }
        Ok(PolynomialTypeMap {
            input_rank,
            output_rank,
            terms,
        })
    }

    pub fn zero(rank: u8) -> Self {
        PolynomialTypeMap {
            input_rank: rank,
            output_rank: rank,
            terms: Vec::new(),
        }
    }

    pub fn evaluate(&self, input: Value) -> Value {
        debug_assert_eq!(input.rank(), self.input_rank);
        let mut acc = match self.output_rank {
            0 => Value::Scalar(0.0),
            _ => Value::Tensor(M2::zeros()),
        };
        for term in &self.terms {
            let v = term.chain.iter().fold(input, |v, p| p.apply(v));
            acc = match (acc, v) {
                (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a + term.coeff * b),
                (Value::Tensor(a), Value::Tensor(b)) => Value::Tensor(a + b * term.coeff),
                _ => unreachable!("type-checked"),
            };
        }
        acc
    }
}

#[derive(Debug, Clone)]
struct Neighbour {
    node: usize,
    conductance: f64,
    /// Rotation taking this neighbour's frame components to ours.
    transport: M2,
    offset: Vec3,
}

/// Frozen weighted graph over a hypersurface.
#[derive(Debug, Clone)]
pub struct Background {
    pub dim: usize,
    pub positions: Vec<Vec3>,
    pub areas: Vec<f64>,
    pub frames: Vec<[Vec3; 2]>,
    neighbours: Vec<Vec<Neighbour>>,
}

fn tangent_frame(normal: Vec3, along: Vec3) -> [Vec3; 2] {
    let e1 = (along - normal * along.dot(&normal)).normalize();
    [e1, normal.cross(&e1)]
}

fn closest_rotation(p: &M2) -> M2 {
    let angle = (p[(1, 0)] - p[(0, 1)]).atan2(p[(0, 0)] + p[(1, 1)]);
    let (s, c) = angle.sin_cos();
    M2::new(c, -s, s, c)
}

impl Background {
    /// Curves: edge conductances `1/ℓ`, dual-length areas. Radial graphs: the
    /// orthogonal part of the divergence-form Laplacian, with each pole row
    /// merged into a single node.
    pub fn from_surface(surface: &DiscreteHypersurface) -> Result<Self, VerifyError> {
        let field = compute_geometry(surface)?;
        match &surface.shape {
            Shape::Curve(c) => {
                let n = c.points.len();
                let pts = &c.points;
                let len: Vec<f64> = (0..n).map(|i| (pts[(i + 1) % n] - pts[i]).norm()).collect();
                let mut neighbours = vec![Vec::new(); n];
                for i in 0..n {
                    let j = (i + 1) % n;
                    let c = 1.0 / len[i];
                    neighbours[i].push(Neighbour {
                        node: j,
                        conductance: c,
                        transport: M2::identity(),
                        offset: pts[j] - pts[i],
                    });
                    neighbours[j].push(Neighbour {
                        node: i,
                        conductance: c,
                        transport: M2::identity(),
                        offset: pts[i] - pts[j],
                    });
                }
                Ok(Background {
                    dim: 1,
                    positions: pts.clone(),
                    areas: (0..n).map(|i| 0.5 * (len[i] + len[(i + n - 1) % n])).collect(),
                    frames: (0..n)
                        .map(|i| {
                            let t = (pts[(i + 1) % n] - pts[(i + n - 1) % n]).normalize();
                            [t, Vec3::zeros()]
                        })
                        .collect(),
                    neighbours,
                })
            }
            Shape::Graph(g) => {
                let (nt, np) = (g.n_theta, g.n_phi);
                let local = graph::Local::new(g)?;
                let (dth, dph) = (g.d_theta(), g.d_phi());
                // node 0: north pole, then interior rows, last node: south pole
                let interior = (nt - 2) * np;
                let count = interior + 2;
                let node = |i: usize, j: usize| -> usize {
                    if i == 0 {
                        0
                    } else if i == nt - 1 {
                        count - 1
                    } else {
                        1 + (i - 1) * np + j % np
                    }
                };
                let mut positions = vec![Vec3::zeros(); count];
                let mut areas = vec![0.0; count];
                let mut frames = vec![[Vec3::zeros(); 2]; count];
                for i in 1..nt - 1 {
                    for j in 0..np {
                        let v = &local.v[g.idx(i, j)];
                        let k = node(i, j);
                        positions[k] = v.pos;
                        areas[k] = v.sqrt_det * dth * dph;
                        frames[k] = tangent_frame(field.normal[g.idx(i, j)], v.xt);
                    }
                }
                let mut coeff_t = vec![0.0; nt * np];
                let mut coeff_p = vec![0.0; nt * np];
                for i in 1..nt - 1 {
                    for j in 0..np {
                        let v = &local.v[g.idx(i, j)];
                        let gi = v.g.inverse();
                        coeff_t[g.idx(i, j)] = v.sqrt_det * gi.xx;
                        coeff_p[g.idx(i, j)] = v.sqrt_det * gi.yy;
                    }
                }
                for (pole, row) in [(0usize, 1usize), (nt - 1, nt - 2)] {
                    let k = node(pole, 0);
                    positions[k] = g.position(pole, 0);
                    let reach: f64 = (0..np)
                        .map(|j| (positions[node(row, j)] - positions[k]).norm())
                        .sum::<f64>()
                        / np as f64;
                    areas[k] = std::f64::consts::PI * (0.5 * reach).powi(2);
                    let nrm = field.normal[g.idx(pole, 0)];
                    let along = if nrm.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
                    frames[k] = tangent_frame(nrm, along);
                }
                let mut neighbours = vec![Vec::new(); count];
                let link = |a: usize, b: usize, c: f64, neighbours: &mut Vec<Vec<Neighbour>>| {
                    let overlap = |x: usize, y: usize| {
                        let (fx, fy) = (&frames[x], &frames[y]);
                        closest_rotation(&M2::new(
                            fx[0].dot(&fy[0]),
                            fx[0].dot(&fy[1]),
                            fx[1].dot(&fy[0]),
                            fx[1].dot(&fy[1]),
                        ))
                    };
                    neighbours[a].push(Neighbour {
                        node: b,
                        conductance: c,
                        transport: overlap(a, b),
                        offset: positions[b] - positions[a],
                    });
                    neighbours[b].push(Neighbour {
                        node: a,
                        conductance: c,
                        transport: overlap(b, a),
                        offset: positions[a] - positions[b],
                    });
                };
                for i in 1..nt - 1 {
                    for j in 0..np {
                        let (k, kn) = (g.idx(i, j), g.idx(i, (j + 1) % np));
                        let cp = 0.5 * (coeff_p[k] + coeff_p[kn]) * dth / dph;
                        link(node(i, j), node(i, j + 1), cp, &mut neighbours);
                        if i + 1 < nt - 1 {
                            let kd = g.idx(i + 1, j);
                            let ct = 0.5 * (coeff_t[k] + coeff_t[kd]) * dph / dth;
                            link(node(i, j), node(i + 1, j), ct, &mut neighbours);
                        }
                    }
                }
                for (pole, row) in [(0usize, 1usize), (nt - 1, nt - 2)] {
                    for j in 0..np {
                        // flux through the half-row next to the pole
                        let ct = 0.5 * coeff_t[g.idx(row, j)] * dph / dth;
                        link(node(pole, 0), node(row, j), ct, &mut neighbours);
                    }
                }
                Ok(Background {
                    dim: 2,
                    positions,
                    areas,
                    frames,
                    neighbours,
                })
            }
        }
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    /// Upwind drift weights `max(0, ⟨X, d⟩)/|d|²` per neighbour.
    fn drift_weights(&self, drift: Option<&[Vec3]>) -> Vec<Vec<f64>> {
        self.neighbours
            .iter()
            .enumerate()
            .map(|(v, nb)| {
                nb.iter()
                    .map(|n| match drift {
                        None => 0.0,
                        Some(x) => x[v].dot(&n.offset).max(0.0) / n.offset.norm_squared(),
                    })
                    .collect()
            })
            .collect()
    }

    /// Largest explicit step keeping every update a convex combination.
    pub fn diffusion_limit(&self, drift: Option<&[Vec3]>) -> f64 {
        let w = self.drift_weights(drift);
        let worst = self
            .neighbours
            .iter()
            .zip(&self.areas)
            .zip(&w)
            .map(|((nb, a), w)| nb.iter().map(|n| n.conductance).sum::<f64>() / a + w.iter().sum::<f64>())
            .fold(0.0, f64::max);
        1.0 / worst
    }

    /// Project ambient vectors onto the tangent spaces.
    pub fn tangential(&self, x: &[Vec3]) -> Vec<Vec3> {
        x.iter()
            .zip(&self.frames)
            .map(|(x, f)| f[0] * x.dot(&f[0]) + f[1] * x.dot(&f[1]))
            .collect()
    }

    /// `∫ f dμ`
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.areas).map(|(f, a)| f * a).sum()
    }
}

#[derive(Debug, Clone)]
pub struct ScalarHistory {
    /// Field after every step, starting with the initial data.
    pub fields: Vec<Vec<f64>>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub integral: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TensorHistory {
    pub fields: Vec<Vec<M2>>,
    /// Smallest eigenvalue over all vertices after every step.
    pub min_eigen: Vec<f64>,
}

fn check_step(bg: &Background, drift: Option<&[Vec3]>, dt: f64) -> Result<Vec<Vec<f64>>, VerifyError> {
    let limit = bg.diffusion_limit(drift);
    if !(dt > 0.0 && dt <= limit) {
        return Err(VerifyError::CflViolation { dt, limit });
    }
    Ok(bg.drift_weights(drift))
}

/// Explicit integration of `∂ρ/∂t = Δρ + dρ(X₀) + P(ρ)` on a frozen background.
pub fn mp_scalar_run(
    bg: &Background,
    rho0: &[f64],
    drift: Option<&[Vec3]>,
    p: &PolynomialTypeMap,
    steps: usize,
    dt: f64,
) -> Result<ScalarHistory, VerifyError> {
    if p.input_rank != 0 || p.output_rank != 0 {
        return Err(VerifyError::IllTypedMap("scalar runs need a rank 0 → 0 map".into()));
    }
    let w = check_step(bg, drift, dt)?;
    let summary = |f: &[f64]| {
        (
            f.iter().copied().fold(f64::INFINITY, f64::min),
            f.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            bg.integrate(f),
        )
    };
    let mut h = ScalarHistory {
        fields: vec![rho0.to_vec()],
        min: Vec::new(),
        max: Vec::new(),
        integral: Vec::new(),
    };
    let (lo, hi, int) = summary(rho0);
    h.min.push(lo);
    h.max.push(hi);
    h.integral.push(int);
    let mut rho = rho0.to_vec();
    for _ in 0..steps {
        let next: Vec<f64> = (0..bg.len())
            .map(|v| {
                let mut rate = 0.0;
                for (n, wd) in bg.neighbours[v].iter().zip(&w[v]) {
                    rate += (n.conductance / bg.areas[v] + wd) * (rho[n.node] - rho[v]);
                }
                let reaction = match p.evaluate(Value::Scalar(rho[v])) {
                    Value::Scalar(x) => x,
                    Value::Tensor(_) => unreachable!(),
                };
                rho[v] + dt * (rate + reaction)
            })
            .collect();
        rho = next;
        let (lo, hi, int) = summary(&rho);
        h.min.push(lo);
        h.max.push(hi);
        h.integral.push(int);
        h.fields.push(rho.clone());
    }
    Ok(h)
}

fn min_eigen(s: &M2) -> f64 {
    let sym = 0.5 * (s + s.transpose());
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Explicit integration of `∂S/∂t = ΔS + ∇_{X₀}S + P(S)` for symmetric
/// 2-tensors on a frozen surface background.
pub fn mp_tensor_run(
    bg: &Background,
    s0: &[M2],
    drift: Option<&[Vec3]>,
    p: &PolynomialTypeMap,
    steps: usize,
    dt: f64,
) -> Result<TensorHistory, VerifyError> {
    if bg.dim != 2 {
        return Err(VerifyError::UnsupportedModel("tensor runs need a surface background".into()));
    }
    if p.input_rank != 2 || p.output_rank != 2 {
        return Err(VerifyError::IllTypedMap("tensor runs need a rank 2 → 2 map".into()));
    }
    let w = check_step(bg, drift, dt)?;
    let track = |f: &[M2]| f.iter().map(min_eigen).fold(f64::INFINITY, f64::min);
    let mut s = s0.to_vec();
    let mut h = TensorHistory {
        fields: vec![s.clone()],
        min_eigen: vec![track(&s)],
    };
    for _ in 0..steps {
        let next: Vec<M2> = (0..bg.len())
            .map(|v| {
                let mut rate = M2::zeros();
                for (n, wd) in bg.neighbours[v].iter().zip(&w[v]) {
                    let moved = n.transport * s[n.node] * n.transport.transpose();
                    rate += (moved - s[v]) * (n.conductance / bg.areas[v] + wd);
                }
                let reaction = match p.evaluate(Value::Tensor(s[v])) {
                    Value::Tensor(x) => x,
                    Value::Scalar(_) => unreachable!(),
                };
                let out = s[v] + (rate + reaction) * dt;
                0.5 * (out + out.transpose())
            })
            .collect();
        s = next;
        h.min_eigen.push(track(&s));
        h.fields.push(s.clone());
    }
    Ok(h)
}

/// Seeded scalar case: nonnegative initial data with a zero set, a random
/// tangential drift and `P(ρ) = c₀ + c₁ρ + c₂ρ²` with `c₀ ≥ 0`, so `P` is
/// nonnegative where `ρ` vanishes.
pub struct ScalarCase {
    pub rho0: Vec<f64>,
    pub drift: Vec<Vec3>,
    pub map: PolynomialTypeMap,
    pub dt: f64,
    pub steps: usize,
}

fn random_affine(rng: &mut ChaCha8Rng, bg: &Background) -> Vec<f64> {
    let scale = bg
        .positions
        .iter()
        .map(|p| p.norm())
        .fold(0.0, f64::max)
        .max(1e-12);
    let a = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let b: f64 = rng.gen_range(-0.5..0.5);
    bg.positions.iter().map(|p| a.dot(p) / scale + b).collect()
}

pub fn random_scalar_case(seed: u64, bg: &Background, steps: usize) -> Result<ScalarCase, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho0: Vec<f64> = random_affine(&mut rng, bg).into_iter().map(|x| x.max(0.0)).collect();
    let x = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let drift = bg.tangential(&vec![x; bg.len()]);
    let terms = vec![
        Term {
            coeff: rng.gen_range(0.0..0.5),
            chain: vec![Primitive::Power(0)],
        },
        Term {
            coeff: rng.gen_range(-1.0..1.0),
            chain: vec![Primitive::Power(1)],
        },
        Term {
            coeff: rng.gen_range(-1.0..1.0),
            chain: vec![Primitive::Power(2)],
        },
    ];
    let map = PolynomialTypeMap::new(0, 0, terms)?;
    let dt = 0.5 * bg.diffusion_limit(Some(&drift));
    Ok(ScalarCase {
        rho0,
        drift,
        map,
        dt,
        steps,
    })
}

/// Seeded tensor case: `S₀ = B Bᵀ` with `B` affine in position (so `S₀` is
/// singular along curves), a random drift, and `P(S) = SQ + QS + cS` with
/// `2Q + c g ⪰ 0`. Every null vector `X` of `S` gives `P(S)(X, X) = 0`.
pub struct TensorCase {
    pub s0: Vec<M2>,
    pub drift: Vec<Vec3>,
    pub map: PolynomialTypeMap,
    pub dt: f64,
    pub steps: usize,
}

pub fn random_tensor_case(seed: u64, bg: &Background, steps: usize) -> Result<TensorCase, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parts: Vec<Vec<f64>> = (0..4).map(|_| random_affine(&mut rng, bg)).collect();
    let s0 = (0..bg.len())
        .map(|v| {
            let b = M2::new(parts[0][v], parts[1][v], parts[2][v], parts[3][v]);
            b * b.transpose()
        })
        .collect();
    let x = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let drift = bg.tangential(&vec![x; bg.len()]);
    let off = rng.gen_range(-1.0..1.0);
    let q = M2::new(rng.gen_range(-1.0..1.0), off, off, rng.gen_range(-1.0..1.0));
    let c = (-2.0 * SymmetricEigen::new(q).eigenvalues.min()).max(0.0) + rng.gen_range(0.0..0.5);
    let map = PolynomialTypeMap::new(
        2,
        2,
        vec![
            Term {
                coeff: 1.0,
                chain: vec![Primitive::TensorRight(q)],
            },
            Term {
                coeff: 1.0,
                chain: vec![Primitive::TensorLeft(q)],
            },
            Term {
                coeff: c,
                chain: vec![Primitive::Power(1)],
            },
        ],
    )?;
    let dt = 0.5 * bg.diffusion_limit(Some(&drift));
    Ok(TensorCase {
        s0,
        drift,
        map,
        dt,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_is_type_checked() {
        let bad = PolynomialTypeMap::new(
            0,
            0,
            vec![Term {
                coeff: 1.0,
                chain: vec![Primitive::Trace],
            }],
        );
        assert!(matches!(bad, Err(VerifyError::IllTypedMap(_))));
        let wrong_output = PolynomialTypeMap::new(
            2,
            2,
            vec![Term {
                coeff: 1.0,
                chain: vec![Primitive::Trace],
            }],
        );
        assert!(matches!(wrong_output, Err(VerifyError::IllTypedMap(_))));
        let ok = PolynomialTypeMap::new(
            2,
            2,
            vec![Term {
                coeff: 2.0,
                chain: vec![Primitive::Trace, Primitive::Outer(M2::identity())],
            }],
        )
        .unwrap();
        let s = M2::new(1.0, 0.5, 0.5, 3.0);
        assert_eq!(ok.evaluate(Value::Tensor(s)), Value::Tensor(M2::identity() * 8.0));
    }

    #[test]
    fn primitives_evaluate() {
        let b = M2::new(0.0, 1.0, 1.0, 0.0);
        let s = M2::new(2.0, 0.0, 0.0, 3.0);
        assert_eq!(Primitive::Power(2).apply(Value::Tensor(s)), Value::Tensor(M2::new(4.0, 0.0, 0.0, 9.0)));
        assert_eq!(Primitive::Power(0).apply(Value::Scalar(7.0)), Value::Scalar(1.0));
        assert_eq!(Primitive::Contract(b).apply(Value::Tensor(s)), Value::Scalar(0.0));
        assert_eq!(Primitive::TensorLeft(b).apply(Value::Tensor(s)), Value::Tensor(M2::new(0.0, 3.0, 2.0, 0.0)));
    }

    #[test]
    fn closest_rotation_of_a_rotation_is_itself() {
        let (s, c) = 0.3f64.sin_cos();
        let r = M2::new(c, -s, s, c);
        assert!((closest_rotation(&(r * 0.9)) - r).norm() < 1e-15);
    }
}
