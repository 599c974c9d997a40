//! Receding-horizon synthesis runtime: glues the privacy mechanisms, hub
//! filters, bisimulation certificate, and MILP synthesis into the
//! replan-every-`T`-steps loop, and validates the chance constraint by
//! Monte Carlo over full episodes.

mod config;
mod context;
mod episode;
mod plan;
mod seeds;
mod validate;

pub use config::{
    AgentConfig, AgentModelConfig, CertificateConfig, GuaranteeConfig, HorizonConfig,
    InputBoundsConfig, ScenarioConfig, SolverConfig,
};
pub use context::SynthesisContext;
pub use episode::{monte_carlo, run_episode, McStats, PlanCache, ReplanRecord, RunTrace};
pub use plan::{build_and_solve, plan_cycle, PlanOutcome, PlanRequest, SolveArtifacts};
pub use seeds::SeedSplitter;
pub use validate::{validate_problem, ValidationReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Temporal(#[from] crate::temporal::TemporalError),
    #[error(transparent)]
    Privacy(#[from] crate::privacy::PrivacyError),
    #[error(transparent)]
    Estimation(#[from] crate::estimation::EstimationError),
    #[error(transparent)]
    Bisim(#[from] crate::bisim::BisimError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Milp(#[from] crate::milp::MilpError),
}
