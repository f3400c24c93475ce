use serde::{Deserialize, Deserializer, Serialize};

use crate::model::ModelSpace;
use crate::surface::{self, DiscreteHypersurface, SurfaceError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeName {
    /// `[r]`, flat plane.
    Circle,
    /// `[a, b]` semi-axes along x and y, flat plane.
    Ellipse,
    /// `[rho]` geodesic radius around the north pole of the homogeneous base.
    GeodesicCircle,
    /// `[r]`, radial graph in R³.
    Sphere,
    /// `[polar, b, c]`: semi-axis along the grid's polar (z) axis, then x and y.
    Ellipsoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSpec {
    pub name: ShapeName,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopConfig {
    /// Stop once `‖H‖_max` reaches this multiple of its initial value.
    #[serde(default = "default_h_factor")]
    pub h_factor: f64,
    /// Stop once the volume falls below this fraction of its initial value.
    #[serde(default = "default_min_volume")]
    pub min_volume_fraction: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            h_factor: default_h_factor(),
            min_volume_fraction: default_min_volume(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub model: ModelSpace,
    pub shape: ShapeSpec,
    /// `[N_v]` for curves, `[N_θ, N_φ]` for radial graphs; a bare integer is accepted.
    #[serde(deserialize_with = "one_or_many")]
    pub resolution: Vec<usize>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default)]
    pub stops: StopConfig,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub sobolev_alpha: f64,
    #[serde(default = "default_cadence")]
    pub cadence: u64,
    #[serde(default)]
    pub redistribute: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_h_factor() -> f64 {
    50.0
}
fn default_min_volume() -> f64 {
    1e-3
}
fn default_max_steps() -> u64 {
    10_000_000
}
fn default_cfl() -> f64 {
    0.2
}
fn default_deltas() -> Vec<f64> {
    vec![0.1, 0.25, 0.5]
}
fn default_alpha() -> f64 {
    0.5
}
fn default_cadence() -> u64 {
    10
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(usize),
        Many(Vec<usize>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(n) => vec![n],
        OneOrMany::Many(v) => v,
    })
}

impl FlowConfig {
    /// Config with every optional key at its default.
    pub fn new(model: ModelSpace, name: ShapeName, params: Vec<f64>, resolution: Vec<usize>) -> Self {
        FlowConfig {
            model,
            shape: ShapeSpec { name, params },
            resolution,
            cfl: default_cfl(),
            stops: StopConfig::default(),
            deltas: default_deltas(),
            sobolev_alpha: default_alpha(),
            cadence: default_cadence(),
            redistribute: false,
            seed: 0,
        }
    }

    pub fn is_curve(&self) -> bool {
        matches!(
            self.shape.name,
            ShapeName::Circle | ShapeName::Ellipse | ShapeName::GeodesicCircle
        )
    }

    /// Check every invariant; the error names the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let err = |key: &str, msg: String| Err(format!("{key}: {msg}"));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return err("cfl", format!("must lie in (0, 1], got {}", self.cfl));
        }
        let s = &self.stops;
        if !(s.h_factor > 1.0 && s.h_factor.is_finite()) {
            return err("stops.h_factor", format!("must exceed 1, got {}", s.h_factor));
        }
        if !(s.min_volume_fraction > 0.0 && s.min_volume_fraction < 1.0) {
            return err(
                "stops.min_volume_fraction",
                format!("must lie in (0, 1), got {}", s.min_volume_fraction),
            );
        }
        if s.max_steps == 0 {
            return err("stops.max_steps", "must be positive".into());
        }
        if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d <= 0.5)) {
            return err("deltas", format!("each δ must lie in (0, 1/2], got {d}"));
        }
        if !(self.sobolev_alpha > 0.0 && self.sobolev_alpha < 1.0) {
            return err(
                "sobolev_alpha",
                format!("must lie in (0, 1), got {}", self.sobolev_alpha),
            );
        }
        if self.cadence == 0 {
            return err("cadence", "must be positive".into());
        }
        match self.model {
            ModelSpace::Flat { dim } if dim == 2 || dim == 3 => {}
            ModelSpace::Flat { dim } => {
                return err("model.dim", format!("must be 2 or 3, got {dim}"));
            }
            ModelSpace::HomogeneousSphereBase { a } if !(a > 0.0 && a.is_finite()) => {
                return err("model.a", format!("must be positive, got {a}"));
            }
            _ => {}
        }
        let (params, base_dim) = match self.shape.name {
            ShapeName::Circle => (1, 2),
            ShapeName::Ellipse => (2, 2),
            ShapeName::GeodesicCircle => (1, 2),
            ShapeName::Sphere => (1, 3),
            ShapeName::Ellipsoid => (3, 3),
        };
        if self.shape.params.len() != params {
            return err(
                "shape.params",
                format!(
                    "{:?} takes {params} parameters, got {}",
                    self.shape.name,
                    self.shape.params.len()
                ),
            );
        }
        if let Some(p) = self.shape.params.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return err("shape.params", format!("must be positive, got {p}"));
        }
        let curved = matches!(self.model, ModelSpace::HomogeneousSphereBase { .. });
        if self.model.base_dim() != base_dim
            || curved != (self.shape.name == ShapeName::GeodesicCircle)
        {
            return err(
                "shape.name",
                format!("{:?} is not available in {:?}", self.shape.name, self.model),
            );
        }
        let want = if self.is_curve() { 1 } else { 2 };
        if self.resolution.len() != want {
            return err(
                "resolution",
                format!("expected {want} entries, got {:?}", self.resolution),
            );
        }
        if self.redistribute && !self.is_curve() {
            return err("redistribute", "only curves can be redistributed".into());
        }
        self.build_surface().map(|_| ()).map_err(|e| format!("shape: {e}"))
    }

    pub fn build_surface(&self) -> Result<DiscreteHypersurface, SurfaceError> {
        let p = &self.shape.params;
        let res = &self.resolution;
        let param = |k: usize| {
            p.get(k)
                .copied()
                .ok_or_else(|| SurfaceError::BadParameters(format!("missing parameter {k}")))
        };
        let grid = || -> Result<(usize, usize), SurfaceError> {
            match res.as_slice() {
                [a, b] => Ok((*a, *b)),
                _ => Err(SurfaceError::BadParameters(format!(
                    "grid resolution needs two entries, got {res:?}"
                ))),
            }
        };
        let nv = || {
            res.first()
                .copied()
                .ok_or_else(|| SurfaceError::BadParameters("empty resolution".into()))
        };
        match self.shape.name {
            ShapeName::Circle => surface::circle(param(0)?, nv()?),
            ShapeName::Ellipse => surface::ellipse(param(0)?, param(1)?, nv()?),
            ShapeName::GeodesicCircle => surface::geodesic_circle(self.model, param(0)?, nv()?),
            ShapeName::Sphere => {
                let (a, b) = grid()?;
                surface::sphere(param(0)?, a, b)
            }
            ShapeName::Ellipsoid => {
                let (a, b) = grid()?;
                surface::ellipsoid(param(0)?, param(1)?, param(2)?, a, b)
            }
        }
    }
}
