//! One replanning cycle: derive the demanded robustness margin from the
//! certificate and the filters' steady-state covariance, rewrite the formula
//! against the observed estimates, and solve the synthesis MILP.

use nalgebra::DVector;

use crate::estimation::beta_for_gamma;
use crate::milp::encode::{encode_dynamics_bounded, encode_mtl, encode_objective, MtlOutcome};
use crate::milp::{solve, MilpModel, Solution, SolveOptions, SolveStatus};
use crate::temporal::{rewrite, robustness, Formula, Trajectory};

use super::context::SynthesisContext;
use super::RuntimeError;

/// Result of one planning cycle.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    /// Network-level inputs for steps `ell .. ell + lookahead`.
    pub inputs: Vec<DVector<f64>>,
    pub beta: f64,
    pub beta_hat: f64,
    /// Margin the accepted solve actually enforced (after any fallback).
    pub beta_hat_used: f64,
    /// 0 = full margin, 1 = halved, 2 = zero margin, 3 = no plan (inputs
    /// empty; caller keeps the previous plan). Levels above 0 void the
    /// probabilistic guarantee.
    pub fallback_level: u8,
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub nodes: u64,
    pub wall_ms: f64,
    /// Rewritten formula (absolute time indices), rendered.
    pub formula_text: String,
    /// Lookahead actually encoded, in steps.
    pub lookahead: usize,
    /// Monitor robustness of the planned nominal trajectory against the
    /// rewritten formula, when a plan exists.
    pub nominal_robustness: Option<f64>,
    /// LP export of the accepted model, when requested.
    pub lp_text: Option<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PlanRequest {
    pub export_lp: bool,
}

/// Plan at step `ell` from the estimate history `estimates[0..=ell]`.
///
/// The margin chain: `beta` comes from the Markov bound at confidence
/// `gamma`; `beta_hat` transfers it through the certificate with one
/// replanning period of process-noise growth. Infeasible programs retry at
/// half margin, then zero margin; both degradations are reported.
pub fn plan_cycle(
    ctx: &SynthesisContext,
    ell: usize,
    estimates: &[DVector<f64>],
    phi_current: &Formula,
    request: PlanRequest,
) -> Result<PlanOutcome, RuntimeError> {
    let cfg = &ctx.config;
    let beta = beta_for_gamma(&ctx.certificate.m, &ctx.sigma_bar, cfg.guarantees.gamma)?;
    let elapsed = cfg.horizon.t as f64 * cfg.dt;
    let beta_hat = ctx.certificate.beta_hat(beta, elapsed, cfg.guarantees.eta)?;

    let phi_rewritten = rewrite(phi_current, estimates, ell, &ctx.table)?;
    let formula_text = phi_rewritten.display(&ctx.table).to_string();

    // remaining obligations measured from the replan instant
    let remaining = phi_rewritten.horizon().saturating_sub(ell);
    let lookahead = cfg.horizon.t.max(remaining);
    let shifted = phi_rewritten.shifted_left(ell).ok_or_else(|| {
        RuntimeError::Config(format!("rewritten formula reaches before step {ell}"))
    })?;

    let x_here = estimates[ell].clone();
    for (level, margin) in [(0u8, beta_hat), (1, beta_hat / 2.0), (2, 0.0)] {
        let art = build_and_solve(ctx, &shifted, margin, &x_here, lookahead, request.export_lp)?;
        if !art.trivially_false && art.solution.assignment.is_some() {
            let nominal_robustness = if matches!(shifted, Formula::True) {
                Some(f64::INFINITY)
            } else {
                let mut states = vec![x_here.clone()];
                for u in &art.inputs {
                    states.push(ctx.network.aggregate.step_nominal(states.last().unwrap(), u));
                }
                let traj =
                    Trajectory::from_states(cfg.dt, states).map_err(RuntimeError::Temporal)?;
                Some(robustness(&shifted, &traj, 0, &ctx.table)?)
            };
            return Ok(PlanOutcome {
                inputs: art.inputs,
                beta,
                beta_hat,
                beta_hat_used: margin,
                fallback_level: level,
                status: art.solution.status,
                objective: art.solution.objective,
                nodes: art.solution.nodes,
                wall_ms: art.solution.wall.as_secs_f64() * 1e3,
                formula_text,
                lookahead,
                nominal_robustness,
                lp_text: art.lp_text,
            });
        }
        if beta_hat == 0.0 {
            break; // margins cannot shrink further
        }
    }
    log::warn!("plan at step {ell} infeasible at every margin level");
    Ok(PlanOutcome {
        inputs: Vec::new(),
        beta,
        beta_hat,
        beta_hat_used: 0.0,
        fallback_level: 3,
        status: SolveStatus::Infeasible,
        objective: None,
        nodes: 0,
        wall_ms: 0.0,
        formula_text,
        lookahead,
        nominal_robustness: None,
        lp_text: None,
    })
}

/// Solve products of one margin attempt.
pub struct SolveArtifacts {
    pub solution: Solution,
    pub lp_text: Option<String>,
    pub trivially_false: bool,
    /// Extracted network inputs per step, when an assignment exists.
    pub inputs: Vec<DVector<f64>>,
}

/// Assemble and solve one synthesis MILP for the (already shifted) formula.
pub fn build_and_solve(
    ctx: &SynthesisContext,
    shifted: &Formula,
    margin: f64,
    x_init: &DVector<f64>,
    lookahead: usize,
    export_lp: bool,
) -> Result<SolveArtifacts, RuntimeError> {
    let mut model = MilpModel::new(&ctx.config.name);
    let handles = encode_dynamics_bounded(
        &mut model,
        &ctx.network,
        x_init,
        lookahead,
        ctx.config.input_bounds.min,
        ctx.config.input_bounds.max,
        Some(&ctx.workspace),
    )?;
    encode_objective(&mut model, &handles);
    let outcome =
        encode_mtl(&mut model, shifted, margin, &handles, &ctx.table, ctx.encode_route())?;
    if outcome == MtlOutcome::Const(false) {
        return Ok(SolveArtifacts {
            solution: Solution {
                status: SolveStatus::Infeasible,
                objective: None,
                assignment: None,
                nodes: 0,
                wall: std::time::Duration::ZERO,
            },
            lp_text: None,
            trivially_false: true,
            inputs: Vec::new(),
        });
    }
    let lp_text = export_lp.then(|| crate::milp::write_lp(&model));
    let opts = SolveOptions { max_nodes: ctx.config.solver.max_nodes, ..Default::default() };
    let solution = solve(&model, &opts);
    let inputs = match &solution.assignment {
        Some(a) => handles
            .u
            .iter()
            .map(|step| DVector::from_fn(step.len(), |j, _| a[step[j].index()]))
            .collect(),
        None => Vec::new(),
    };
    Ok(SolveArtifacts { solution, lp_text, trivially_false: false, inputs })
}
