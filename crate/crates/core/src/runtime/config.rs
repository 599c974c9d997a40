//! Scenario configuration. The struct doubles as the JSON file schema
//! (`schema: 1`); unknown keys are rejected everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::privacy::PrivacyParams;
use crate::temporal::AtomicPredicate;

use super::RuntimeError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// File format version; must be 1.
    pub schema: u32,
    pub name: String,
    /// Sampling period.
    pub dt: f64,
    pub agents: Vec<AgentConfig>,
    /// Formula text over the predicate names below.
    pub formula: String,
    /// Predicates by name; alphabetical order defines predicate ids.
    pub predicates: BTreeMap<String, AtomicPredicate>,
    pub horizon: HorizonConfig,
    pub guarantees: GuaranteeConfig,
    pub input_bounds: InputBoundsConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Master seed; per-agent and per-purpose streams are split from it.
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    pub model: AgentModelConfig,
    pub initial_state: Vec<f64>,
    /// Differential-privacy parameters; omit to disable the mechanism
    /// (sigma = 0, no privacy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<PrivacyParams>,
    /// Optional per-coordinate workspace box `[lo, hi]` (null entries leave
    /// a coordinate unbounded). Planned nominal trajectories are constrained
    /// to it, and the reach intervals behind every big-M tighten to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_bounds: Option<Vec<Option<(f64, f64)>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentModelConfig {
    /// Feedback-linearized unicycle: double integrator per position axis
    /// with diffusion `b` on the velocity rows.
    Unicycle { b: f64 },
    /// Explicit continuous-time matrices.
    Lti {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        upsilon: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    /// Replanning period in steps.
    pub t: usize,
    /// Replanning cutoff: the loop replans while `step < t_max`.
    pub t_max: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuaranteeConfig {
    /// Estimation-error confidence (Markov side).
    pub gamma: f64,
    /// Process-noise deviation confidence (bisimulation side).
    pub eta: f64,
    /// Demanded satisfaction probability; requires `gamma * eta >= chi`.
    pub chi: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBoundsConfig {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    /// Certificate decay rate; default picks
    /// `min(1, |spectral abscissa|)` of the closed loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Closed-loop eigenvalue margin demanded of the stabilizing
    /// prefeedback.
    #[serde(default = "default_margin")]
    pub stabilization_margin: f64,
    /// Explicit per-agent feedback gains (rows x state columns); default is
    /// the gain synthesized by the stabilizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_override: Option<Vec<Vec<Vec<f64>>>>,
}

fn default_margin() -> f64 {
    0.25
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig { mu: None, stabilization_margin: default_margin(), feedback_override: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_max_nodes")]
    pub max_nodes: u64,
    /// `indicator` (default) or `value` temporal encoding.
    #[serde(default = "default_encoding")]
    pub encoding: String,
}

fn default_max_nodes() -> u64 {
    2_000_000
}

fn default_encoding() -> String {
    "indicator".to_string()
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_nodes: default_max_nodes(), encoding: default_encoding() }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural checks that do not need the built artifacts.
    pub fn validate_shallow(&self) -> Result<(), RuntimeError> {
        if self.schema != 1 {
            return Err(RuntimeError::Config(format!(
                "unsupported schema version {} (expected 1)",
                self.schema
            )));
        }
        if self.agents.is_empty() {
            return Err(RuntimeError::Config("no agents".into()));
        }
        if !(self.dt > 0.0) {
            return Err(RuntimeError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.horizon.t == 0 {
            return Err(RuntimeError::Config("replanning period T must be at least 1".into()));
        }
        let g = &self.guarantees;
        for (name, v) in [("gamma", g.gamma), ("eta", g.eta), ("chi", g.chi)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(RuntimeError::Config(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if self.input_bounds.min > self.input_bounds.max {
            return Err(RuntimeError::Config(format!(
                "input bounds inverted: [{}, {}]",
                self.input_bounds.min, self.input_bounds.max
            )));
        }
        match self.solver.encoding.as_str() {
            "indicator" | "value" => Ok(()),
            other => Err(RuntimeError::Config(format!(
                "unknown encoding `{other}` (expected `indicator` or `value`)"
            ))),
        }
    }
}
