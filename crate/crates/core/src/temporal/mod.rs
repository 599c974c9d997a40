//! Metric temporal logic over discrete-time trajectories: formula
//! representation, a concrete text grammar, quantitative (robustness)
//! semantics, and online rewriting of partially observed formulas.
//!
//! All operations here are pure functions of immutable inputs.

mod formula;
mod parser;
mod predicates;
mod rewrite;
mod robustness;

pub use formula::{Formula, Interval};
pub use parser::parse_formula;
pub use predicates::{signed_distance, AtomicPredicate, PredId, PredicateTable};
pub use rewrite::rewrite;
pub use robustness::{boolean_sat, robustness, Trajectory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemporalError {
    #[error("syntax error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown predicate `{name}` at byte {pos}")]
    UnknownPredicate { pos: usize, name: String },
    #[error("state dimension {got} too small for predicate touching coordinate {needed}")]
    DimensionMismatch { needed: usize, got: usize },
    #[error("trajectory has {len} samples but evaluation needs index {needed}")]
    TraceTooShort { needed: usize, len: usize },
    #[error("invalid predicate: {0}")]
    BadPredicate(String),
    #[error("invalid trajectory: {0}")]
    BadTrajectory(String),
    #[error("rewrite prefix has {len} states but current index is {l}")]
    PrefixTooShort { len: usize, l: usize },
}
