//! Shared helpers for integration tests: deterministic random formulas,
//! predicate tables, and traces, plus glue to evaluate a fixed trace through
//! the MILP encoder.

#![allow(dead_code)]

use mtlsynth::dynamics::{DiscreteLTI, NetworkModel};
use mtlsynth::milp::encode::{encode_dynamics, DynamicsHandles};
use mtlsynth::milp::MilpModel;
use mtlsynth::temporal::{AtomicPredicate, Formula, Interval, PredicateTable, Trajectory};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::Rng;

/// Random predicate table over `dim`-dimensional states: a few boxes and,
/// when the dimension allows, one separation predicate.
pub fn random_predicates(rng: &mut StdRng, dim: usize) -> PredicateTable {
    let mut table = PredicateTable::new();
    let n_boxes = rng.random_range(2..=4);
    for i in 0..n_boxes {
        let naxes = rng.random_range(1..=dim.min(2));
        let mut dims = Vec::new();
        while dims.len() < naxes {
            let d = rng.random_range(0..dim);
            if !dims.contains(&d) {
                dims.push(d);
            }
        }
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for _ in 0..naxes {
            let c: f64 = rng.random_range(-6.0..6.0);
            let w: f64 = rng.random_range(1.0..6.0);
            lower.push(c - w);
            upper.push(c + w);
        }
        table.insert(&format!("p{i}"), AtomicPredicate::boxed(dims, lower, upper)).unwrap();
    }
    if dim >= 4 && rng.random_bool(0.5) {
        table
            .insert(
                "sep",
                AtomicPredicate::PairwiseSeparation {
                    left: vec![0, 1],
                    right: vec![2, 3],
                    d_safe: rng.random_range(1.0..4.0),
                },
            )
            .unwrap();
    }
    table
}

/// Random formula of bounded depth and horizon over the table's atoms.
pub fn random_formula(
    rng: &mut StdRng,
    table: &PredicateTable,
    depth: usize,
    max_horizon: usize,
) -> Formula {
    let atom = |rng: &mut StdRng| {
        let idx = rng.random_range(0..table.len());
        Formula::Atom(table.iter().nth(idx).unwrap().0)
    };
    if depth == 0 || max_horizon == 0 {
        let f = atom(rng);
        return if rng.random_bool(0.2) { Formula::not(f) } else { f };
    }
    match rng.random_range(0..6) {
        0 => {
            let f = random_formula(rng, table, depth - 1, max_horizon);
            Formula::not(f)
        }
        1 => Formula::and(
            random_formula(rng, table, depth - 1, max_horizon),
            random_formula(rng, table, depth - 1, max_horizon),
        ),
        2 => Formula::or(
            random_formula(rng, table, depth - 1, max_horizon),
            random_formula(rng, table, depth - 1, max_horizon),
        ),
        3 => {
            let hi = rng.random_range(0..=max_horizon.min(5));
            let lo = rng.random_range(0..=hi);
            let inner = random_formula(rng, table, depth - 1, max_horizon - hi);
            Formula::eventually(Interval::new(lo, hi), inner)
        }
        4 => {
            let hi = rng.random_range(0..=max_horizon.min(5));
            let lo = rng.random_range(0..=hi);
            let inner = random_formula(rng, table, depth - 1, max_horizon - hi);
            Formula::always(Interval::new(lo, hi), inner)
        }
        _ => {
            let hi = rng.random_range(1..=max_horizon.min(4).max(1));
            let lo = rng.random_range(0..=hi);
            let budget = max_horizon - hi;
            Formula::until(
                Interval::new(lo, hi),
                random_formula(rng, table, depth.saturating_sub(2), budget),
                random_formula(rng, table, depth - 1, budget),
            )
        }
    }
}

/// Random trace of `len` states in `dim` dimensions.
pub fn random_trace(rng: &mut StdRng, dim: usize, len: usize) -> Trajectory {
    let states = (0..len)
        .map(|_| DVector::from_fn(dim, |_, _| rng.random_range(-10.0..10.0)))
        .collect();
    Trajectory::from_states(1.0, states).unwrap()
}

/// Single-agent integrator network `x[k+1] = x[k] + u[k]` in `dim`
/// dimensions, used to pin an arbitrary trace into the MILP.
pub fn integrator_network(dim: usize) -> NetworkModel {
    let model = DiscreteLTI::new(
        DMatrix::identity(dim, dim),
        DMatrix::identity(dim, dim),
        DMatrix::identity(dim, dim),
        DMatrix::zeros(dim, dim),
        1.0,
    )
    .unwrap();
    NetworkModel::aggregate(vec![model]).unwrap()
}

/// Encode the integrator dynamics and pin the inputs so the rollout equals
/// `traj` exactly.
pub fn pin_trace(model: &mut MilpModel, net: &NetworkModel, traj: &Trajectory) -> DynamicsHandles {
    let dim = traj.state(0).len();
    let steps = traj.len() - 1;
    let span = 25.0;
    let handles = encode_dynamics(model, net, traj.state(0), steps, -span, span).unwrap();
    for k in 0..steps {
        let delta = traj.state(k + 1) - traj.state(k);
        for j in 0..dim {
            model.fix_var(handles.u[k][j], delta[j]);
        }
    }
    handles
}
