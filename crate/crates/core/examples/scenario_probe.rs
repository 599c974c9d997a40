//! Timing probe for the bundled scenario: builds the context, runs one
//! episode, and prints per-replan solver statistics.

use mtlsynth::runtime::{run_episode, ScenarioConfig, SynthesisContext};
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "scenarios/two_unicycles.json".into());
    let text = std::fs::read_to_string(&path).expect("read scenario");
    let config = ScenarioConfig::from_json(&text).expect("parse scenario");
    let t0 = Instant::now();
    let ctx = SynthesisContext::build(config).expect("build context");
    println!("context built in {:?}", t0.elapsed());
    println!(
        "certificate: mu = {}, alpha = {:.6}, |m| = {:.4}",
        ctx.certificate.mu,
        ctx.certificate.alpha,
        mtlsynth::matrix::largest_singular_value(&ctx.certificate.m)
    );
    println!("sigma_bar trace = {:.6}", ctx.sigma_bar.trace());
    for (i, mech) in ctx.mechanisms.iter().enumerate() {
        println!("agent {i}: sigma = {:.6}", mech.sigma());
    }

    let t1 = Instant::now();
    let trace = run_episode(&ctx, 7, None, Default::default()).expect("episode");
    println!("episode in {:?}", t1.elapsed());
    for r in &trace.replans {
        println!(
            "replan @{}: status {:?}, obj {:?}, beta_hat {:.4}, nominal rob {:?}, nodes {}, {:.1} ms, lookahead {}",
            r.ell,
            r.outcome.status,
            r.outcome.objective,
            r.outcome.beta_hat,
            r.outcome.nominal_robustness,
            r.outcome.nodes,
            r.outcome.wall_ms,
            r.outcome.lookahead,
        );
    }
    println!(
        "satisfied: {}, robustness {:.4}, degraded {}",
        trace.satisfied, trace.robustness, trace.degraded
    );
}
