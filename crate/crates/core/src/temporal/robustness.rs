use nalgebra::DVector;

use super::formula::Formula;
use super::predicates::{signed_distance, PredicateTable};
use super::TemporalError;

/// Uniformly sampled discrete-time trajectory of the aggregated network
/// state. Robustness is evaluated at sample instants only.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self, TemporalError> {
        if times.len() != states.len() {
            return Err(TemporalError::BadTrajectory(format!(
                "{} times vs {} states",
                times.len(),
                states.len()
            )));
        }
        if times.is_empty() {
            return Err(TemporalError::BadTrajectory("empty trajectory".into()));
        }
        if times.iter().any(|t| !t.is_finite())
            || states.iter().any(|x| x.iter().any(|v| !v.is_finite()))
        {
            return Err(TemporalError::BadTrajectory("non-finite sample".into()));
        }
        if times.len() > 1 {
            let dt = times[1] - times[0];
            if dt <= 0.0 {
                return Err(TemporalError::BadTrajectory("times not increasing".into()));
            }
            let scale = dt.abs().max(times.iter().fold(0.0f64, |a, t| a.max(t.abs())));
            for w in times.windows(2) {
                let step = w[1] - w[0];
                if step <= 0.0 || (step - dt).abs() > 1e-9 * scale {
                    return Err(TemporalError::BadTrajectory(format!(
                        "non-uniform spacing: {step} vs {dt}"
                    )));
                }
            }
        }
        Ok(Trajectory { times, states })
    }

    /// Trajectory sampled at `0, dt, 2dt, …`.
    pub fn from_states(dt: f64, states: Vec<DVector<f64>>) -> Result<Self, TemporalError> {
        let times = (0..states.len()).map(|k| k as f64 * dt).collect();
        Trajectory::new(times, states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &DVector<f64> {
        &self.states[k]
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }
}

/// Robustness degree of `phi` over `traj` at time index `k`, extended with
/// ±∞ (which arise only from `true`/`false` and propagate exactly through
/// max/min). Nonnegative iff the trajectory satisfies the formula.
pub fn robustness(
    phi: &Formula,
    traj: &Trajectory,
    k: usize,
    table: &PredicateTable,
) -> Result<f64, TemporalError> {
    let needed = k + phi.horizon();
    if needed >= traj.len() {
        return Err(TemporalError::TraceTooShort { needed, len: traj.len() });
    }
    eval(phi, traj, k, table)
}

fn eval(
    phi: &Formula,
    traj: &Trajectory,
    k: usize,
    table: &PredicateTable,
) -> Result<f64, TemporalError> {
    Ok(match phi {
        Formula::True => f64::INFINITY,
        Formula::False => f64::NEG_INFINITY,
        Formula::Atom(p) => signed_distance(traj.state(k), table.get(*p))?,
        Formula::Not(f) => -eval(f, traj, k, table)?,
        Formula::And(a, b) => eval(a, traj, k, table)?.min(eval(b, traj, k, table)?),
        Formula::Or(a, b) => eval(a, traj, k, table)?.max(eval(b, traj, k, table)?),
        Formula::Eventually(i, f) => {
            let mut best = f64::NEG_INFINITY;
            for kp in i.shifted(k) {
                best = best.max(eval(f, traj, kp, table)?);
            }
            best
        }
        Formula::Always(i, f) => {
            let mut worst = f64::INFINITY;
            for kp in i.shifted(k) {
                worst = worst.min(eval(f, traj, kp, table)?);
            }
            worst
        }
        Formula::Until(i, a, b) => {
            let mut best = f64::NEG_INFINITY;
            // running minimum of the left operand over k <= k'' < k'
            let mut left_min = f64::INFINITY;
            for kp in i.shifted(k) {
                if kp > k + i.lo {
                    // extend the left minimum to cover the new k'' = kp - 1
                    left_min = left_min.min(eval(a, traj, kp - 1, table)?);
                } else if i.lo > 0 {
                    for kpp in k..kp {
                        left_min = left_min.min(eval(a, traj, kpp, table)?);
                    }
                }
                let rhs = eval(b, traj, kp, table)?;
                best = best.max(rhs.min(left_min));
            }
            best
        }
    })
}

/// Boolean satisfaction: `robustness >= 0`.
pub fn boolean_sat(
    phi: &Formula,
    traj: &Trajectory,
    k: usize,
    table: &PredicateTable,
) -> Result<bool, TemporalError> {
    Ok(robustness(phi, traj, k, table)? >= 0.0)
}
