//! Probe the first-replan MILP of a scenario at several node budgets.

use mtlsynth::runtime::{plan_cycle, ScenarioConfig, SynthesisContext};
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/two_unicycles.json".into());
    let budget: u64 =
        std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let text = std::fs::read_to_string(&path).expect("read scenario");
    let mut config = ScenarioConfig::from_json(&text).expect("parse scenario");
    config.solver.max_nodes = budget;
    let ctx = SynthesisContext::build(config).expect("build context");
    eprintln!("lookahead will be {}", ctx.formula.horizon().max(ctx.config.horizon.t));
    let t = Instant::now();
    let outcome =
        plan_cycle(&ctx, 0, &[ctx.x0.clone()], &ctx.formula, Default::default()).expect("plan");
    eprintln!(
        "budget {budget}: status {:?} obj {:?} nodes {} in {:?} (fallback {})",
        outcome.status,
        outcome.objective,
        outcome.nodes,
        t.elapsed(),
        outcome.fallback_level
    );
}
