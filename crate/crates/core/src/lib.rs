//! Solid modelling with CSG-Stumps: a fixed three-layer Boolean normal form
//! (complement, intersection, union) over parametric primitives.
//!
//! - [`geometry`]: primitives, poses and signed distance fields.
//! - [`csg`]: expression trees, the text DSL, stumps and tree-to-stump conversion.
//! - [`sampling`]: labelled test points, surface samples, Chamfer distance.
//! - [`fit`]: connection-matrix solvers and gradient-based refinement.
//! - [`io`]: stump JSON, OpenSCAD, occupancy grids, marching cubes.
//! - [`toy`]: bundled example shapes.

pub mod csg;
pub mod fit;
pub mod geometry;
pub mod io;
pub mod sampling;
pub mod toy;

pub use csg::{CsgExpr, CsgModel, SoftStump, Solid, Stump};
pub use geometry::{Aabb, Pose, Primitive, PrimitiveKind, Sharpness, Vec3};
