//! CSG expressions, the expression language, stumps and their evaluation.

mod expr;
mod normalize;
mod parse;
mod simplify;
mod stump;

use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

pub use expr::{eval_tree_hard, CsgExpr, CsgModel};
pub use normalize::{terms_to_stump, to_terms, tree_to_stump, Term, DEFAULT_TERM_CAP};
pub use parse::{parse_csg, ParseError};
pub use simplify::simplify_stump;
pub use stump::{binarize, soft_extreme, soft_max, soft_min, ParamClass, SoftStump, Stump};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsgError {
    #[error("leaf index {index} out of range for {len} primitive(s)")]
    LeafOutOfRange { index: usize, len: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("connection weight {0} outside [0, 1]")]
    WeightRange(f64),
    #[error("binarization threshold {0} must lie in (0, 1)")]
    Threshold(f64),
    #[error("normalization produced {terms} intersection terms, above the cap of {cap}")]
    TermOverflow { terms: usize, cap: usize },
}

/// A hard solid that can be sampled and meshed.
pub trait Solid: Sync {
    fn contains(&self, x: &Vec3) -> bool;
    /// Signed field whose zero set is the boundary (negative inside). Built by
    /// composing primitive SDFs with min/max/negation.
    fn field(&self, x: &Vec3) -> f64;
    /// Sampling bounds: tight bounds inflated by 5%, unbounded parts clamped
    /// to the world box.
    fn bounds(&self) -> Aabb;
}
