//! Recovering connection matrices from labelled samples (binary programming)
//! and refining primitives plus relaxed weights by gradient descent.

mod anneal;
mod bp;
mod loss;
mod refine;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

#[cfg(not(target_arch = "wasm32"))]
pub(crate) use std::time::Instant;
#[cfg(target_arch = "wasm32")]
pub(crate) use web_time::Instant;

pub use anneal::{solve_anneal, solve_anneal_from, AnnealConfig, AnnealInit};
pub use bp::{
    bp_objective, solve_exhaustive, solve_exhaustive_with, solve_minterm, BpInstance, Matrices, RowLayout,
    DEFAULT_EXHAUSTIVE_CAP,
};
pub use loss::{grad_check, loss_primitive, loss_recon, loss_total, loss_total_grad, GradCheckReport, DEFAULT_LAMBDA};
pub use refine::{refine_continuous, OptimConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("exhaustive search over {bits} bits exceeds the cap of {cap}")]
    Budget { bits: usize, cap: usize },
    #[error("the minterm construction needs complements (allow_complement = true)")]
    ComplementRequired,
    #[error("point set is empty")]
    EmptyPoints,
    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("non-finite loss at iteration {iteration} (parameter {parameter})")]
    NonFinite { iteration: usize, parameter: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Exhaustive,
    Minterm,
    Anneal,
    Continuous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub solver: SolverKind,
    /// Mean absolute occupancy error for the discrete solvers, best `L_total`
    /// for continuous refinement.
    pub objective: f64,
    /// Best-so-far objective; the last entry equals `objective`.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub wall_time: f64,
    /// Positive-gain minterm signatures, the column count that suffices for the best minterm fit.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_columns: Option<usize>,
}
