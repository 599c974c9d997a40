//! Solve the first-replan program at an explicit robustness margin.

use mtlsynth::runtime::{build_and_solve, ScenarioConfig, SynthesisContext};
use mtlsynth::temporal::rewrite;
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/two_unicycles.json".into());
    let margin: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let text = std::fs::read_to_string(&path).expect("read scenario");
    let config = ScenarioConfig::from_json(&text).expect("parse scenario");
    let ctx = SynthesisContext::build(config).expect("build context");
    let phi = rewrite(&ctx.formula, &[ctx.x0.clone()], 0, &ctx.table).expect("rewrite");
    let lookahead = ctx.formula.horizon().max(ctx.config.horizon.t);
    let t = Instant::now();
    let art = build_and_solve(&ctx, &phi, margin, &ctx.x0, lookahead, false).expect("solve");
    println!(
        "margin {margin}: {:?} obj {:?} nodes {} trivially_false {} in {:?}",
        art.solution.status,
        art.solution.objective,
        art.solution.nodes,
        art.trivially_false,
        t.elapsed()
    );
}
