//! Mixed-integer linear programming: model construction, the temporal-logic
//! and dynamics encoders, an embedded branch-and-bound solver over
//! bounded-variable primal simplex relaxations, and LP-format text export.

pub mod encode;
mod lp_format;
mod model;
mod presolve;
mod simplex;
mod solver;

pub use lp_format::{parse_lp, write_lp};
pub use model::{
    Constraint, MilpModel, Sense, Solution, SolveStatus, VarId, VarKind, Variable,
};
pub use solver::{solve, SolveOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("formula horizon {horizon} exceeds the encoded lookahead of {steps} steps")]
    HorizonOverflow { horizon: usize, steps: usize },
    #[error("variable {0:?} out of range")]
    BadVariable(model::VarId),
    #[error("inconsistent input bounds: lower {lo} above upper {hi}")]
    BadBounds { lo: f64, hi: f64 },
    #[error("model has no objective or constraints to work with: {0}")]
    EmptyModel(String),
    #[error("LP parse error at line {line}: {msg}")]
    LpParse { line: usize, msg: String },
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("temporal error during encoding: {0}")]
    Temporal(#[from] crate::temporal::TemporalError),
}
