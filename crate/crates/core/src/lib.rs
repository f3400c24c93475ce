//! Numerical laboratory for the mean curvature flow of invariant
//! hypersurfaces, reduced to the orbit space.
//!
//! Curves evolve in the plane or in the round base sphere of the homogeneous
//! model; surfaces evolve as radial graphs in flat R³.

pub mod diagnostics;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod model;
mod nonfinite;
pub mod surface;
pub mod verify;
