//! Feedback-linearized unicycle: the planning model is a double integrator
//! per position axis; the physical wheel commands are recovered by rotating
//! the planar acceleration into the body frame.

use nalgebra::DMatrix;

use super::{ContinuousLTI, DynamicsError};

/// Speed floor used when dividing the commanded `v·ω` by `v`; below it, the
/// angular rate is computed against the floor and the command is flagged.
pub const V_FLOOR: f64 = 1e-3;

/// Pose and body rates of the physical unicycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnicycleState {
    /// x-position.
    pub rho: f64,
    /// y-position.
    pub kappa: f64,
    /// Heading (radians).
    pub theta: f64,
    /// Forward speed.
    pub v: f64,
    /// Angular rate.
    pub omega: f64,
}

/// Commands recovered from the planar accelerations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelCommands {
    /// Forward acceleration.
    pub v_dot: f64,
    /// Commanded `v·ω` product.
    pub v_omega: f64,
    /// Angular rate implied at the current speed.
    pub omega: f64,
    /// Right / left wheel speeds realizing `(v, omega)` at half-axle `d`.
    pub wheel_right: f64,
    pub wheel_left: f64,
    /// True when the speed was below [`V_FLOOR`] and the division was
    /// clamped.
    pub clamped: bool,
}

/// Planning model for one agent: state `(rho, kappa, rho_dot, kappa_dot)`,
/// inputs the two planar accelerations, diffusion `b` entering the velocity
/// rows.
pub fn build_unicycle_agent(b: f64) -> Result<ContinuousLTI, DynamicsError> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 0.0,
        ],
    );
    let b_mat = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
    let upsilon = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 0.0, b, 0.0, 0.0, b]);
    ContinuousLTI::new(a, b_mat, upsilon)
}

/// Rotate the planar accelerations `(u1, u2)` into body coordinates:
/// `v_dot = cosθ u1 + sinθ u2`, `vω = -sinθ u1 + cosθ u2`; decompose the
/// implied `(v, ω)` into wheel speeds `v ± d ω`.
pub fn recover_wheel_commands(
    u1: f64,
    u2: f64,
    state: &UnicycleState,
    half_axle: f64,
) -> WheelCommands {
    let (s, c) = state.theta.sin_cos();
    let v_dot = c * u1 + s * u2;
    let v_omega = -s * u1 + c * u2;
    let clamped = state.v.abs() < V_FLOOR;
    let v_eff = if clamped { V_FLOOR.copysign(if state.v < 0.0 { -1.0 } else { 1.0 }) } else { state.v };
    let omega = v_omega / v_eff;
    WheelCommands {
        v_dot,
        v_omega,
        omega,
        wheel_right: state.v + half_axle * omega,
        wheel_left: state.v - half_axle * omega,
        clamped,
    }
}

/// Advance the nonlinear kinematics under held `(v_dot, v_omega)` commands
/// with one classical Runge–Kutta step. Used to check demo fidelity of the
/// linearization, not for synthesis.
pub fn simulate_unicycle_kinematics(
    state: &UnicycleState,
    v_dot: f64,
    v_omega: f64,
    dt: f64,
) -> UnicycleState {
    // state vector (rho, kappa, theta, v); omega derived from v_omega / v
    let f = |s: [f64; 4]| -> [f64; 4] {
        let v = s[3];
        let v_eff = if v.abs() < V_FLOOR { V_FLOOR.copysign(if v < 0.0 { -1.0 } else { 1.0 }) } else { v };
        [v * s[2].cos(), v * s[2].sin(), v_omega / v_eff, v_dot]
    };
    let y = [state.rho, state.kappa, state.theta, state.v];
    let add = |a: [f64; 4], b: [f64; 4], h: f64| {
        [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]]
    };
    let k1 = f(y);
    let k2 = f(add(y, k1, dt / 2.0));
    let k3 = f(add(y, k2, dt / 2.0));
    let k4 = f(add(y, k3, dt));
    let mut out = y;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let v = out[3];
    let v_eff = if v.abs() < V_FLOOR { V_FLOOR.copysign(if v < 0.0 { -1.0 } else { 1.0 }) } else { v };
    UnicycleState { rho: out[0], kappa: out[1], theta: out[2], v, omega: v_omega / v_eff }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::discretize;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn zero_diffusion_is_deterministic_double_integrator() {
        let sys = build_unicycle_agent(0.0).unwrap();
        assert_eq!(sys.upsilon, DMatrix::zeros(4, 2));
        // nilpotent of index 2: a² = 0
        assert_eq!(&sys.a * &sys.a, DMatrix::zeros(4, 4));
    }

    #[test]
    fn discretization_matches_nilpotent_closed_form() {
        let sys = build_unicycle_agent(0.01).unwrap();
        let d = discretize(&sys, DMatrix::identity(4, 4), 1.0).unwrap();
        let mut a_expect = DMatrix::<f64>::identity(4, 4);
        a_expect[(0, 2)] = 1.0;
        a_expect[(1, 3)] = 1.0;
        assert_relative_eq!((d.a - a_expect).norm(), 0.0, epsilon = 1e-12);
        let b_expect =
            DMatrix::from_row_slice(4, 2, &[0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 1.0]);
        assert_relative_eq!((d.b - b_expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn heading_zero_is_identity_rotation() {
        let s = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.0, v: 1.0, omega: 0.0 };
        let c = recover_wheel_commands(2.0, 3.0, &s, 0.5);
        assert_relative_eq!(c.v_dot, 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.v_omega, 3.0, epsilon = 1e-12);
        assert!(!c.clamped);
    }

    #[test]
    fn quarter_turn_rotation() {
        let s = UnicycleState {
            rho: 0.0,
            kappa: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
            v: 1.0,
            omega: 0.0,
        };
        let c = recover_wheel_commands(1.0, 0.0, &s, 0.5);
        assert_relative_eq!(c.v_dot, 0.0, epsilon = 1e-12);
        assert_relative_eq!(c.v_omega, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_preserves_norm() {
        let s = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.77, v: 2.0, omega: 0.1 };
        let c = recover_wheel_commands(3.0, -4.0, &s, 0.5);
        assert_relative_eq!(
            (c.v_dot * c.v_dot + c.v_omega * c.v_omega).sqrt(),
            5.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn wheel_speeds_decompose_v_and_omega() {
        let s = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.0, v: 2.0, omega: 0.0 };
        let c = recover_wheel_commands(0.0, 1.0, &s, 0.5);
        // omega = v_omega / v = 0.5; wheels v ± d omega = 2 ± 0.25
        assert_relative_eq!(c.omega, 0.5, epsilon = 1e-12);
        assert_relative_eq!(c.wheel_right, 2.25, epsilon = 1e-12);
        assert_relative_eq!(c.wheel_left, 1.75, epsilon = 1e-12);
        // (wheel_r + wheel_l)/2 = v, (wheel_r - wheel_l)/(2d) = omega
        assert_relative_eq!((c.wheel_right + c.wheel_left) / 2.0, s.v, epsilon = 1e-12);
        assert_relative_eq!((c.wheel_right - c.wheel_left) / 1.0, c.omega, epsilon = 1e-12);
    }

    #[test]
    fn near_zero_speed_is_clamped_and_reported() {
        let s = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.0, v: 0.0, omega: 0.0 };
        let c = recover_wheel_commands(0.0, 1.0, &s, 0.5);
        assert!(c.clamped);
        assert!(c.omega.is_finite());
    }

    #[test]
    fn straight_line_motion() {
        let s = UnicycleState { rho: 1.0, kappa: 2.0, theta: 0.0, v: 3.0, omega: 0.0 };
        let next = simulate_unicycle_kinematics(&s, 0.0, 0.0, 0.5);
        assert_relative_eq!(next.rho, 2.5, epsilon = 1e-12);
        assert_relative_eq!(next.kappa, 2.0, epsilon = 1e-12);
        assert_relative_eq!(next.v, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_remains_stationary() {
        let s = UnicycleState { rho: 1.0, kappa: 1.0, theta: 0.3, v: 0.0, omega: 0.0 };
        let next = simulate_unicycle_kinematics(&s, 0.0, 0.0, 1.0);
        assert_relative_eq!(next.rho, 1.0, epsilon = 1e-12);
        assert_relative_eq!(next.kappa, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_closes_after_one_period() {
        // constant v and omega trace a circle of period 2π/ω; pick ω so the
        // period is an exact number of steps
        let v = 2.0;
        let omega = std::f64::consts::FRAC_PI_4;
        let start = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.0, v, omega };
        let dt = 1e-3;
        let steps = 8000; // period 2π/ω = 8 exactly
        let mut s = start;
        for _ in 0..steps {
            s = simulate_unicycle_kinematics(&s, 0.0, v * omega, dt);
        }
        assert!((s.rho - start.rho).abs() < 1e-6, "rho drift {}", s.rho - start.rho);
        assert!((s.kappa - start.kappa).abs() < 1e-6, "kappa drift {}", s.kappa - start.kappa);
    }

    #[test]
    fn feedback_linearization_tracks_double_integrator() {
        // hold piecewise-constant planar accelerations for one unit each and
        // compare the nonlinear rollout under recovered commands against the
        // exact linear model
        let sys = build_unicycle_agent(0.0).unwrap();
        let d = discretize(&sys, DMatrix::identity(4, 4), 1.0).unwrap();
        let inputs: [[f64; 2]; 20] = [
            [3.0, 0.0],
            [2.0, 0.5],
            [0.0, 1.0],
            [-1.0, 0.5],
            [0.5, -0.5],
            [1.0, 0.0],
            [0.0, 0.0],
            [-0.5, -1.0],
            [0.0, 0.5],
            [1.5, 0.5],
            [-1.0, 0.0],
            [0.0, -0.5],
            [0.5, 0.5],
            [1.0, -1.0],
            [0.0, 0.0],
            [-1.5, 0.5],
            [0.5, 0.0],
            [0.0, 1.0],
            [-0.5, -0.5],
            [1.0, 0.0],
        ];
        let mut x_lin = nalgebra::DVector::from_column_slice(&[0.0, 0.0, 0.0, 0.0]);
        let mut s = UnicycleState { rho: 0.0, kappa: 0.0, theta: 0.0, v: 0.0, omega: 0.0 };
        let substeps = 1000;
        let h = 1.0 / substeps as f64;
        let mut worst = 0.0f64;
        // closed-loop field: the body-frame commands are recomputed from the
        // heading at every stage evaluation, as the linearization prescribes
        let field = |y: [f64; 4], u: [f64; 2]| -> [f64; 4] {
            let probe = UnicycleState { rho: y[0], kappa: y[1], theta: y[2], v: y[3], omega: 0.0 };
            let c = recover_wheel_commands(u[0], u[1], &probe, 0.5);
            [y[3] * y[2].cos(), y[3] * y[2].sin(), c.omega, c.v_dot]
        };
        for u in inputs {
            x_lin = d.step_nominal(&x_lin, &nalgebra::DVector::from_column_slice(&u));
            for _ in 0..substeps {
                let y = [s.rho, s.kappa, s.theta, s.v];
                let add = |a: [f64; 4], b: [f64; 4], w: f64| {
                    [a[0] + w * b[0], a[1] + w * b[1], a[2] + w * b[2], a[3] + w * b[3]]
                };
                let k1 = field(y, u);
                let k2 = field(add(y, k1, h / 2.0), u);
                let k3 = field(add(y, k2, h / 2.0), u);
                let k4 = field(add(y, k3, h), u);
                let mut out = y;
                for i in 0..4 {
                    out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                s = UnicycleState { rho: out[0], kappa: out[1], theta: out[2], v: out[3], omega: s.omega };
            }
            worst = worst
                .max((s.rho - x_lin[0]).abs())
                .max((s.kappa - x_lin[1]).abs());
        }
        assert!(worst <= 1e-3, "position error {worst}");
    }
}
