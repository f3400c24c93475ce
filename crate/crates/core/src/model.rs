//! Base geometries together with the O'Neill correction data the reduced
//! evolution equations consume.
//!
//! The total space is never represented. A model only carries the
//! contractions of the integrability tensor (and the vanishing fibre
//! second fundamental form) that appear in the curvature evolution
//! equations on the orbit space, plus the ambient constants used by the
//! convexity threshold and the Sobolev admissibility conditions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: model base supports n = {expected}, got n = {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported model/dimension pair: {0}")]
    UnsupportedModel(String),
}

/// A base space `N = V/G` with closed-form submersion data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpace {
    /// Flat Euclidean space of dimension `dim` (hypersurfaces have `n = dim - 1`).
    Flat { dim: usize },
    /// Two-dimensional homogeneous base with parallel integrability tensor of
    /// magnitude `a`; a round sphere of curvature `3a²`.
    HomogeneousSphereBase { a: f64 },
}

/// The constants `(L, K, K̄, R̄)` exposed to the convexity and Sobolev checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmbientExposure {
    pub l: f64,
    pub k: f64,
    pub max_sectional: f64,
    pub injectivity_radius: f64,
}

impl ModelSpace {
    pub fn flat(dim: usize) -> Self {
        ModelSpace::Flat { dim }
    }

    pub fn homogeneous(a: f64) -> Self {
        ModelSpace::HomogeneousSphereBase { a }
    }

    /// Dimension of the base space.
    pub fn base_dim(&self) -> usize {
        match *self {
            ModelSpace::Flat { dim } => dim,
            ModelSpace::HomogeneousSphereBase { .. } => 2,
        }
    }

    /// Hypersurface dimension `n`.
    pub fn hypersurface_dim(&self) -> usize {
        self.base_dim() - 1
    }

    /// `|A_{e1} e2|` for an orthonormal horizontal pair.
    pub fn oneill_magnitude(&self) -> f64 {
        match *self {
            ModelSpace::Flat { .. } => 0.0,
            ModelSpace::HomogeneousSphereBase { a } => a,
        }
    }

    /// Sup of the contraction of the integrability tensor with its covariant
    /// derivative. Zero for both catalogued models: the flat model has no
    /// integrability tensor and the homogeneous one has a parallel tensor.
    pub fn l_constant(&self) -> f64 {
        0.0
    }

    /// Max of `|A_{e1} e2|²` over orthonormal systems.
    pub fn k_constant(&self) -> f64 {
        let a = self.oneill_magnitude();
        a * a
    }

    /// Max sectional curvature of the base, `sec = 3 |A_X Y|²` over a flat total space.
    pub fn max_sectional(&self) -> f64 {
        3.0 * self.k_constant()
    }

    pub fn injectivity_radius(&self) -> f64 {
        let kbar = self.max_sectional();
        if kbar > 0.0 {
            std::f64::consts::PI / kbar.sqrt()
        } else {
            f64::INFINITY
        }
    }

    /// Radius of the round base sphere, `None` for the flat model or `a = 0`.
    pub fn base_radius(&self) -> Option<f64> {
        let kbar = self.max_sectional();
        (kbar > 0.0).then(|| 1.0 / kbar.sqrt())
    }

    fn check_dim(&self, n: usize) -> Result<(), ModelError> {
        let expected = self.hypersurface_dim();
        if n != expected {
            return Err(ModelError::DimensionMismatch { expected, got: n });
        }
        Ok(())
    }
}

/// `Tr((A_ξ)²)` restricted to the horizontal tangent space of the hypersurface,
/// for a unit horizontal normal `ξ`.
///
/// In the homogeneous model the single tangent direction `e` orthogonal to `ξ`
/// contributes `⟨A_ξ A_ξ e, e⟩ = -|A_ξ e|² = -a²`; `ξ` itself is excluded and
/// would contribute nothing since `A_ξ ξ = 0`.
pub fn oneill_trace_xi(model: &ModelSpace, n: usize) -> Result<f64, ModelError> {
    model.check_dim(n)?;
    Ok(match model {
        ModelSpace::Flat { .. } => 0.0,
        // one coupled tangent direction per horizontal tangent vector
        ModelSpace::HomogeneousSphereBase { .. } => -model.k_constant() * n as f64,
    })
}

/// Per-vertex `Tr((A_ξ)² ∘ A)` where `A` is the shape operator with
/// principal curvatures `lambdas[v]` (length-`n` slices).
pub fn oneill_composed_trace(
    model: &ModelSpace,
    n: usize,
    lambdas: &[Vec<f64>],
) -> Result<Vec<f64>, ModelError> {
    model.check_dim(n)?;
    let k = model.k_constant();
    Ok(match model {
        ModelSpace::Flat { .. } => vec![0.0; lambdas.len()],
        ModelSpace::HomogeneousSphereBase { .. } => lambdas
            .iter()
            .map(|l| -k * l.iter().sum::<f64>())
            .collect(),
    })
}

/// Values of the curvature correction form `R(X, X)` on a tangent frame,
/// together with its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CurlyR {
    /// Per vertex, row-major `n × n` symmetric form in an orthonormal tangent frame.
    pub form: Vec<Vec<f64>>,
    pub trace: Vec<f64>,
}

/// The correction form of the second fundamental form evolution.
///
/// Every term of the form contains either `A_e e` (zero by alternation when
/// `n = 1`), the covariant derivative of the integrability tensor (zero in the
/// homogeneous model) or the fibre tensor (zero: fibres are totally geodesic),
/// so both catalogued models return the zero form.
pub fn curly_r(model: &ModelSpace, n: usize, vertices: usize) -> Result<CurlyR, ModelError> {
    match (model, n) {
        (ModelSpace::Flat { dim }, n) if n + 1 == *dim => {}
        (ModelSpace::HomogeneousSphereBase { .. }, 1) => {}
        _ => {
            return Err(ModelError::UnsupportedModel(format!(
                "{model:?} with n = {n}"
            )))
        }
    }
    Ok(CurlyR {
        form: vec![vec![0.0; n * n]; vertices],
        trace: vec![0.0; vertices],
    })
}

pub fn ambient_exposure(model: &ModelSpace) -> AmbientExposure {
    AmbientExposure {
        l: model.l_constant(),
        k: model.k_constant(),
        max_sectional: model.max_sectional(),
        injectivity_radius: model.injectivity_radius(),
    }
}
