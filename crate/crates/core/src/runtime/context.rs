//! Built artifacts shared by every episode of a scenario: discretized
//! closed-loop models, privacy mechanisms, steady-state filters, the
//! bisimulation certificate, and the parsed formula.

use nalgebra::{DMatrix, DVector};

use crate::bisim::{compute_certificate, default_mu, stabilize, BisimCertificate};
use crate::dynamics::{build_unicycle_agent, discretize, ContinuousLTI, NetworkModel};
use crate::estimation::HubFilter;
use crate::matrix::block_diag;
use crate::privacy::GaussianMechanism;
use crate::temporal::{parse_formula, Formula, PredicateTable};

use super::config::{AgentModelConfig, ScenarioConfig};
use super::RuntimeError;

/// Keeps the hub filters' innovation covariance invertible when the privacy
/// mechanism is disabled (sigma = 0).
const V_FLOOR: f64 = 1e-12;

pub struct SynthesisContext {
    pub config: ScenarioConfig,
    pub table: PredicateTable,
    pub formula: Formula,
    /// Closed-loop network: each agent's drift already includes its
    /// stabilizing prefeedback, so the synthesized signal is the residual
    /// input on top of it.
    pub network: NetworkModel,
    pub certificate: BisimCertificate,
    pub mechanisms: Vec<GaussianMechanism>,
    /// Template filters at their initial state; episodes clone them.
    pub filters: Vec<HubFilter>,
    /// Block-diagonal network a-posteriori covariance.
    pub sigma_bar: DMatrix<f64>,
    pub x0: DVector<f64>,
    /// Aggregated per-coordinate workspace box for planning.
    pub workspace: Vec<(f64, f64)>,
    /// Episode length in steps: formulas may reach past the replanning
    /// cutoff, and satisfaction needs states through their horizon.
    pub episode_steps: usize,
}

fn to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, RuntimeError> {
    if rows.is_empty() {
        return Err(RuntimeError::Config(format!("{what}: empty matrix")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(RuntimeError::Config(format!("{what}: ragged matrix")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

impl SynthesisContext {
    pub fn build(config: ScenarioConfig) -> Result<Self, RuntimeError> {
        config.validate_shallow()?;

        // predicates in alphabetical order (BTreeMap iteration order)
        let mut table = PredicateTable::new();
        for (name, pred) in &config.predicates {
            table.insert(name, pred.clone())?;
        }
        let formula = parse_formula(&config.formula, &table)?;

        let mut discrete = Vec::new();
        let mut mechanisms = Vec::new();
        let mut filters = Vec::new();
        let mut x0_parts = Vec::new();
        let mut a_cl_blocks = Vec::new();
        let mut upsilon_blocks = Vec::new();
        let mut k_blocks = Vec::new();
        for agent in &config.agents {
            let model: ContinuousLTI = match &agent.model {
                AgentModelConfig::Unicycle { b } => build_unicycle_agent(*b)?,
                AgentModelConfig::Lti { a, b, upsilon } => ContinuousLTI::new(
                    to_matrix(a, &agent.name)?,
                    to_matrix(b, &agent.name)?,
                    to_matrix(upsilon, &agent.name)?,
                )?,
            };
            let n = model.state_dim();
            if agent.initial_state.len() != n {
                return Err(RuntimeError::Config(format!(
                    "agent {}: initial state has {} entries, model has {} states",
                    agent.name,
                    agent.initial_state.len(),
                    n
                )));
            }

            let k = match &config.certificate.feedback_override {
                Some(gains) => {
                    let idx = discrete.len();
                    let g = gains.get(idx).ok_or_else(|| {
                        RuntimeError::Config(format!(
                            "feedback_override missing entry for agent {}",
                            agent.name
                        ))
                    })?;
                    to_matrix(g, &format!("feedback for {}", agent.name))?
                }
                None => stabilize(&model.a, &model.b, config.certificate.stabilization_margin)?,
            };
            let closed = model.with_feedback(&k);
            let c_out = DMatrix::identity(n, n);
            let d = discretize(&closed, c_out, config.dt)?;

            let mech = match &agent.privacy {
                Some(params) => GaussianMechanism::calibrated(&d.c, params)?,
                None => GaussianMechanism::disabled(d.output_dim()),
            };
            let v = mech.covariance() + DMatrix::identity(n, n) * V_FLOOR;
            let x0_agent = DVector::from_column_slice(&agent.initial_state);
            let filter = HubFilter::new(
                d.a.clone(),
                d.b.clone(),
                d.c.clone(),
                &d.w_cov,
                &v,
                x0_agent.clone(),
            )?;

            a_cl_blocks.push(closed.a.clone());
            upsilon_blocks.push(closed.upsilon.clone());
            k_blocks.push(k);
            x0_parts.push(x0_agent);
            mechanisms.push(mech);
            filters.push(filter);
            discrete.push(d);
        }

        let network = NetworkModel::aggregate(discrete)?;
        let sigma_bar =
            block_diag(&filters.iter().map(|f| f.sigma_bar().clone()).collect::<Vec<_>>());

        let k_net = block_diag(&k_blocks);
        let a_cl_net = block_diag(&a_cl_blocks);
        let upsilon_net = block_diag(&upsilon_blocks);
        let mu = config.certificate.mu.unwrap_or_else(|| default_mu(&a_cl_net));
        let certificate = compute_certificate(&a_cl_net, &upsilon_net, mu, k_net)?;

        // dimension check: predicates must project inside the network state
        let state_dim = network.state_dim();
        for (_, name, pred) in table.iter() {
            if pred.max_dim() >= state_dim {
                return Err(RuntimeError::Config(format!(
                    "predicate {name} touches coordinate {} but the network has {} states",
                    pred.max_dim(),
                    state_dim
                )));
            }
        }

        let mut x0 = DVector::zeros(state_dim);
        let mut off = 0;
        for part in &x0_parts {
            x0.rows_mut(off, part.len()).copy_from(part);
            off += part.len();
        }

        let inf = f64::INFINITY;
        let mut workspace = Vec::with_capacity(state_dim);
        for (i, agent) in config.agents.iter().enumerate() {
            let dim = network.agents[i].state_dim();
            match &agent.state_bounds {
                Some(bounds) => {
                    if bounds.len() != dim {
                        return Err(RuntimeError::Config(format!(
                            "agent {}: state_bounds has {} entries, model has {} states",
                            agent.name,
                            bounds.len(),
                            dim
                        )));
                    }
                    for b in bounds {
                        match b {
                            Some((lo, hi)) if lo < hi => workspace.push((*lo, *hi)),
                            Some((lo, hi)) => {
                                return Err(RuntimeError::Config(format!(
                                    "agent {}: workspace interval [{lo}, {hi}] empty",
                                    agent.name
                                )))
                            }
                            None => workspace.push((-inf, inf)),
                        }
                    }
                }
                None => workspace.extend(std::iter::repeat((-inf, inf)).take(dim)),
            }
        }

        let episode_steps = config.horizon.t_max.max(formula.horizon());

        Ok(SynthesisContext {
            config,
            table,
            formula,
            network,
            certificate,
            mechanisms,
            filters,
            sigma_bar,
            x0,
            workspace,
            episode_steps,
        })
    }

    pub fn encode_route(&self) -> crate::milp::encode::EncodeRoute {
        if self.config.solver.encoding == "value" {
            crate::milp::encode::EncodeRoute::Value
        } else {
            crate::milp::encode::EncodeRoute::Indicator
        }
    }
}
