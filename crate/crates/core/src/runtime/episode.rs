//! Full closed-loop episodes and their Monte Carlo aggregation.
//!
//! Per step: each agent privatizes its output with its own noise stream,
//! each hub filters, and at every multiple of `T` before the cutoff the
//! cloud replans from the estimate history. The plant advances with the
//! per-agent process-noise streams. Everything is deterministic in the
//! master seed.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::milp::SolveStatus;
use crate::privacy::privatize;
use crate::temporal::{boolean_sat, robustness, Trajectory};

use super::context::SynthesisContext;
use super::plan::{plan_cycle, PlanOutcome, PlanRequest};
use super::seeds::SeedSplitter;
use super::RuntimeError;

/// Everything recorded along one episode.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub seed: u64,
    pub dt: f64,
    /// True states, indices `0..=steps`.
    pub states: Vec<DVector<f64>>,
    /// Hub estimates, aggregated, indices `0..=steps`.
    pub estimates: Vec<DVector<f64>>,
    /// Privatized outputs, aggregated, indices `1..=steps` (none at 0).
    pub outputs_priv: Vec<DVector<f64>>,
    /// Applied inputs, indices `0..steps`.
    pub inputs: Vec<DVector<f64>>,
    pub replans: Vec<ReplanRecord>,
    pub satisfied: bool,
    pub robustness: f64,
    /// True when any replanning cycle degraded its margin or kept stale
    /// inputs; the probabilistic guarantee is void for this episode.
    pub degraded: bool,
}

#[derive(Debug, Clone)]
pub struct ReplanRecord {
    pub ell: usize,
    pub outcome: PlanOutcome,
}

impl RunTrace {
    /// Recompute satisfaction from the stored states (consistency check and
    /// CSV-reload path).
    pub fn recompute_robustness(&self, ctx: &SynthesisContext) -> Result<f64, RuntimeError> {
        let traj = Trajectory::from_states(self.dt, self.states.clone())?;
        Ok(robustness(&ctx.formula, &traj, 0, &ctx.table)?)
    }

    pub fn all_replans_optimal_with_margin(&self) -> bool {
        self.replans.iter().all(|r| {
            r.outcome.status == SolveStatus::Optimal
                && r.outcome.fallback_level == 0
                && r.outcome
                    .nominal_robustness
                    .is_some_and(|rob| rob >= r.outcome.beta_hat - 1e-9)
        })
    }
}

/// Reuse of identical planning problems across episodes. The first replan of
/// every episode starts from the same known initial state, so its MILP is
/// identical; later replans hit only when estimates coincide bitwise.
#[derive(Default)]
pub struct PlanCache {
    map: Mutex<HashMap<PlanKey, PlanOutcome>>,
}

/// The estimate history determines both the rewrite and the initial state,
/// so it keys the plan fully for a fixed context.
#[derive(PartialEq, Eq, Hash)]
struct PlanKey {
    ell: usize,
    estimate_bits: Vec<u64>,
}

impl PlanCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_compute(
        &self,
        ctx: &SynthesisContext,
        ell: usize,
        estimates: &[DVector<f64>],
        phi: &crate::temporal::Formula,
        request: PlanRequest,
    ) -> Result<PlanOutcome, RuntimeError> {
        let key = PlanKey {
            ell,
            estimate_bits: estimates
                .iter()
                .flat_map(|e| e.iter().map(|v| v.to_bits()))
                .collect(),
        };
        if let Some(hit) = self.map.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let outcome = plan_cycle(ctx, ell, estimates, phi, request)?;
        self.map.lock().unwrap().insert(key, outcome.clone());
        Ok(outcome)
    }
}

/// Run one episode. Deterministic per `(context, seed)`.
pub fn run_episode(
    ctx: &SynthesisContext,
    seed: u64,
    cache: Option<&PlanCache>,
    request: PlanRequest,
) -> Result<RunTrace, RuntimeError> {
    let cfg = &ctx.config;
    let splitter = SeedSplitter::new(seed);
    let n_agents = ctx.network.num_agents();
    let mut plant_rngs: Vec<ChaCha12Rng> = (0..n_agents)
        .map(|i| ChaCha12Rng::seed_from_u64(splitter.stream("plant", i as u64)))
        .collect();
    let mut privacy_rngs: Vec<ChaCha12Rng> = (0..n_agents)
        .map(|i| ChaCha12Rng::seed_from_u64(splitter.stream("privacy", i as u64)))
        .collect();

    let steps = ctx.episode_steps;
    let mut filters: Vec<_> = ctx.filters.clone();
    let mut x = ctx.x0.clone();
    let mut states = vec![x.clone()];
    let mut estimates = vec![ctx.x0.clone()]; // agents know their own start
    let mut outputs_priv = Vec::new();
    let mut inputs = Vec::new();
    let mut replans = Vec::new();
    let mut degraded = false;

    // inputs indexed by absolute step, filled by the latest plan
    let mut planned: Vec<DVector<f64>> =
        vec![DVector::zeros(ctx.network.input_dim()); steps];
    let mut covered = 0usize;

    for k in 0..steps {
        if k % cfg.horizon.t == 0 && k < cfg.horizon.t_max {
            let outcome = match cache {
                Some(c) => c.get_or_compute(ctx, k, &estimates, &ctx.formula, request)?,
                None => plan_cycle(ctx, k, &estimates, &ctx.formula, request)?,
            };
            if outcome.fallback_level > 0 {
                degraded = true;
            }
            // fresh inputs replace the previous plan from k onward
            for (offset, u) in outcome.inputs.iter().enumerate() {
                if k + offset < steps {
                    planned[k + offset] = u.clone();
                }
            }
            covered = covered.max(k + outcome.inputs.len());
            if outcome.inputs.is_empty() && covered <= k {
                // no plan at all: hold zero input and mark the episode
                degraded = true;
            }
            replans.push(ReplanRecord { ell: k, outcome });
        }
        let u = if k < covered { planned[k].clone() } else { DVector::zeros(ctx.network.input_dim()) };

        // plant advances with per-agent process noise
        x = ctx.network.step_stochastic_per_agent(&x, &u, &mut plant_rngs);

        // agents privatize their outputs; hubs filter
        let mut est = DVector::zeros(ctx.network.state_dim());
        let mut out_all = DVector::zeros(ctx.network.state_dim());
        for i in 0..n_agents {
            let model = &ctx.network.agents[i];
            let xi = ctx.network.agent_state(&x, i);
            let yi = model.output(&xi);
            let y_tilde = privatize(&yi, &ctx.mechanisms[i], &mut privacy_rngs[i])?;
            let ui = ctx.network.agent_input(&u, i);
            let est_i = filters[i].step(&ui, &y_tilde).clone();
            let off = ctx.network.state_offset(i);
            est.rows_mut(off, est_i.len()).copy_from(&est_i);
            out_all
                .rows_mut(ctx.network.output_offset(i), y_tilde.len())
                .copy_from(&y_tilde);
        }
        inputs.push(u);
        states.push(x.clone());
        estimates.push(est);
        outputs_priv.push(out_all);
    }

    let traj = Trajectory::from_states(cfg.dt, states.clone())?;
    let robustness_value = robustness(&ctx.formula, &traj, 0, &ctx.table)?;
    let satisfied = boolean_sat(&ctx.formula, &traj, 0, &ctx.table)?;

    Ok(RunTrace {
        seed,
        dt: cfg.dt,
        states,
        estimates,
        outputs_priv,
        inputs,
        replans,
        satisfied,
        robustness: robustness_value,
        degraded,
    })
}

/// Satisfaction statistics over independent episodes.
#[derive(Debug, Clone)]
pub struct McStats {
    pub episodes: usize,
    pub satisfied: usize,
    pub rate: f64,
    /// 95% Wilson score interval on the satisfaction probability.
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub per_episode: Vec<EpisodeSummary>,
}

#[derive(Debug, Clone)]
pub struct EpisodeSummary {
    pub index: usize,
    pub seed: u64,
    pub satisfied: bool,
    pub robustness: f64,
    pub degraded: bool,
    pub all_replans_optimal: bool,
}

/// Run `n` episodes with seeds split from the master seed, in parallel when
/// `threads != 1`. The per-episode results and the aggregate are identical
/// for every thread count.
pub fn monte_carlo(
    ctx: &SynthesisContext,
    n: usize,
    threads: usize,
) -> Result<McStats, RuntimeError> {
    let splitter = SeedSplitter::new(ctx.config.seed);
    let cache = PlanCache::new();
    let results: Vec<Result<RunTrace, RuntimeError>> = crate::par::map_indexed(n, threads, |i| {
        let seed = splitter.stream("episode", i as u64);
        run_episode(ctx, seed, Some(&cache), PlanRequest::default())
    });
    let mut per_episode = Vec::with_capacity(n);
    let mut satisfied = 0usize;
    for (i, r) in results.into_iter().enumerate() {
        let trace = r?;
        if trace.satisfied {
            satisfied += 1;
        }
        per_episode.push(EpisodeSummary {
            index: i,
            seed: trace.seed,
            satisfied: trace.satisfied,
            robustness: trace.robustness,
            degraded: trace.degraded,
            all_replans_optimal: trace.all_replans_optimal_with_margin(),
        });
    }
    let rate = satisfied as f64 / n.max(1) as f64;
    let (wilson_low, wilson_high) = wilson_interval(satisfied, n);
    Ok(McStats { episodes: n, satisfied, rate, wilson_low, wilson_high, per_episode })
}

/// 95% Wilson score interval.
fn wilson_interval(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}
