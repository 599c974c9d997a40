//! Synthesis of control inputs for multi-agent linear stochastic systems
//! subject to metric temporal logic (MTL) specifications, with each agent's
//! shared output passed through a differentially private Gaussian mechanism.
//!
//! The pipeline: agents privatize their outputs, local hubs run steady-state
//! Kalman filters on the privatized streams, and a cloud replans inputs every
//! `T` steps by solving a mixed-integer linear program that demands the
//! nominal trajectory satisfy the MTL formula with a robustness margin. A
//! stochastic control bisimulation certificate converts that margin into a
//! probabilistic satisfaction guarantee for the true (noisy) trajectory.

pub mod bisim;
pub mod dynamics;
pub mod estimation;
pub mod matrix;
pub mod milp;
pub mod par;
pub mod privacy;
pub mod runtime;
pub mod temporal;
