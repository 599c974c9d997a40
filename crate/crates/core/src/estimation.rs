//! Steady-state Kalman filtering of privatized agent outputs at the local
//! hubs, the discrete algebraic Riccati equation behind it, and the
//! mean-squared-error / Markov bounds that feed the robustness-margin
//! computation.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::matrix::{frob_dist, sym_eig_max, sym_eig_min, symmetrize};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("Riccati iteration did not converge within {0} iterations")]
    DareDiverged(usize),
    #[error("matrix dimensions inconsistent: {0}")]
    Dimensions(String),
    #[error("innovation covariance not invertible")]
    SingularInnovation,
    #[error("{name} must be positive, got {value}")]
    BadScalar { name: &'static str, value: f64 },
}

const DARE_TOL: f64 = 1e-12;
const DARE_MAX_ITERS: usize = 100_000;

/// A-priori error covariance: fixed point of the Riccati recursion
/// `sigma = a sigma aᵀ - a sigma cᵀ (c sigma cᵀ + v)⁻¹ c sigma aᵀ + w`,
/// iterated from `sigma = w` and symmetrized each step, until successive
/// iterates differ by less than 1e-12 in Frobenius norm.
pub fn solve_dare(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    w: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>, EstimationError> {
    let n = a.nrows();
    if a.ncols() != n || c.ncols() != n || w.shape() != (n, n) || v.nrows() != c.nrows() {
        return Err(EstimationError::Dimensions(format!(
            "a {:?}, c {:?}, w {:?}, v {:?}",
            a.shape(),
            c.shape(),
            w.shape(),
            v.shape()
        )));
    }
    let mut sigma = symmetrize(w);
    for _ in 0..DARE_MAX_ITERS {
        let next = riccati_rhs(a, c, w, v, &sigma)?;
        let delta = frob_dist(&next, &sigma);
        sigma = next;
        if delta < DARE_TOL {
            return Ok(sigma);
        }
    }
    Err(EstimationError::DareDiverged(DARE_MAX_ITERS))
}

/// One application of the Riccati right-hand side.
pub fn riccati_rhs(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    w: &DMatrix<f64>,
    v: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Result<DMatrix<f64>, EstimationError> {
    let asig = a * sigma;
    let innov = c * sigma * c.transpose() + v;
    let gain_t = innov
        .clone()
        .lu()
        .solve(&(c * sigma * a.transpose()))
        .ok_or(EstimationError::SingularInnovation)?;
    Ok(symmetrize(&(&asig * a.transpose() - asig * c.transpose() * gain_t + w)))
}

/// A-posteriori covariance
/// `sigma_bar = sigma - sigma cᵀ (c sigma cᵀ + v)⁻¹ c sigma`.
pub fn posterior_cov(
    sigma: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
) -> Result<DMatrix<f64>, EstimationError> {
    let innov = c * sigma * c.transpose() + v;
    let solved = innov
        .lu()
        .solve(&(c * sigma))
        .ok_or(EstimationError::SingularInnovation)?;
    Ok(symmetrize(&(sigma - sigma * c.transpose() * solved)))
}

/// Steady-state Kalman filter a local hub runs for one agent. The gain is
/// frozen at its steady-state value from step 0.
#[derive(Debug, Clone)]
pub struct HubFilter {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    gain: DMatrix<f64>,
    sigma: DMatrix<f64>,
    sigma_bar: DMatrix<f64>,
    estimate: DVector<f64>,
}

impl HubFilter {
    /// Solves the DARE for `(a, c, w, v)` and initializes the estimate.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        w: &DMatrix<f64>,
        v: &DMatrix<f64>,
        x0: DVector<f64>,
    ) -> Result<HubFilter, EstimationError> {
        let sigma = solve_dare(&a, &c, w, v)?;
        let sigma_bar = posterior_cov(&sigma, &c, v)?;
        // gain = sigma_bar cᵀ v⁻¹, via a solve against vᵀ = v
        let gain_t = v
            .clone()
            .lu()
            .solve(&(&c * &sigma_bar))
            .ok_or(EstimationError::SingularInnovation)?;
        let gain = gain_t.transpose();
        if b.nrows() != a.nrows() || x0.len() != a.nrows() {
            return Err(EstimationError::Dimensions("b or x0 against a".into()));
        }
        Ok(HubFilter { a, b, c, gain, sigma, sigma_bar, estimate: x0 })
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.estimate
    }

    pub fn set_estimate(&mut self, x: DVector<f64>) {
        assert_eq!(x.len(), self.a.nrows());
        self.estimate = x;
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_bar(&self) -> &DMatrix<f64> {
        &self.sigma_bar
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// Prediction step: a-priori estimate `a x̂ + b u`.
    pub fn predict(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.a * &self.estimate + &self.b * u
    }

    /// Measurement update with the steady-state gain; consumes the a-priori
    /// estimate from [`predict`](Self::predict) and the privatized output.
    pub fn update(&mut self, prior: DVector<f64>, y_tilde: &DVector<f64>) -> &DVector<f64> {
        let innovation = y_tilde - &self.c * &prior;
        self.estimate = prior + &self.gain * innovation;
        &self.estimate
    }

    /// Convenience: predict-then-update in one step.
    pub fn step(&mut self, u: &DVector<f64>, y_tilde: &DVector<f64>) -> &DVector<f64> {
        let prior = self.predict(u);
        self.update(prior, y_tilde)
    }
}

/// Bounds on the `m`-weighted estimation MSE assembled from the eigenvalue
/// extremes of `m` and trace extremes of the a-posteriori covariance over
/// the privacy-parameter box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `lambda_min(m) tr_min <= E[(x-x̂)ᵀ m (x-x̂)] <= lambda_max(m) tr_max`,
/// where the trace extremes come from the most- and least-private corners
/// of the parameter box.
pub fn mse_bounds(m: &DMatrix<f64>, tr_sigma_bar_min: f64, tr_sigma_bar_max: f64) -> MseBounds {
    MseBounds {
        lower: sym_eig_min(m) * tr_sigma_bar_min,
        upper: sym_eig_max(m) * tr_sigma_bar_max,
    }
}

/// Markov bound `P[(x-x̂)ᵀ m (x-x̂) >= beta] <= tr(m sigma_bar) / beta`,
/// clamped to 1.
pub fn markov_bound(
    m: &DMatrix<f64>,
    sigma_bar: &DMatrix<f64>,
    beta: f64,
) -> Result<f64, EstimationError> {
    if !(beta > 0.0) {
        return Err(EstimationError::BadScalar { name: "beta", value: beta });
    }
    Ok(((m * sigma_bar).trace() / beta).min(1.0))
}

/// The `beta` that makes the Markov bound equal `1 - gamma`:
/// `beta = tr(m sigma_bar) / (1 - gamma)`.
pub fn beta_for_gamma(
    m: &DMatrix<f64>,
    sigma_bar: &DMatrix<f64>,
    gamma: f64,
) -> Result<f64, EstimationError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EstimationError::BadScalar { name: "gamma", value: gamma });
    }
    Ok((m * sigma_bar).trace() / (1.0 - gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m1(x: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(1, 1, &[x])
    }

    #[test]
    fn dare_scalar_deadbeat() {
        // a = 0 kills the quadratic terms: sigma = w
        let sigma = solve_dare(&m1(0.0), &m1(1.0), &m1(0.7), &m1(0.3)).unwrap();
        assert_relative_eq!(sigma[(0, 0)], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn dare_scalar_golden_ratio() {
        // a = c = w = v = 1: sigma² - sigma - 1 = 0, so sigma = (1+√5)/2
        let sigma = solve_dare(&m1(1.0), &m1(1.0), &m1(1.0), &m1(1.0)).unwrap();
        let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
        assert!((sigma[(0, 0)] - phi).abs() < 1e-9, "{} vs {}", sigma[(0, 0)], phi);
    }

    #[test]
    fn dare_residual_small() {
        let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.2, -0.1, 0.7]);
        let c = DMatrix::<f64>::identity(2, 2);
        let w = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.3]);
        let v = DMatrix::<f64>::identity(2, 2) * 0.5;
        let sigma = solve_dare(&a, &c, &w, &v).unwrap();
        let resid = frob_dist(&riccati_rhs(&a, &c, &w, &v, &sigma).unwrap(), &sigma);
        assert!(resid <= 1e-9, "residual {resid}");
        assert!(sym_eig_min(&sigma) > -1e-9);
    }

    #[test]
    fn more_noise_larger_prior_covariance() {
        let a = DMatrix::from_row_slice(2, 2, &[0.95, 0.1, 0.0, 0.9]);
        let c = DMatrix::<f64>::identity(2, 2);
        let w = DMatrix::<f64>::identity(2, 2) * 0.2;
        let v_small = DMatrix::<f64>::identity(2, 2) * 0.1;
        let v_large = DMatrix::<f64>::identity(2, 2) * 1.0;
        let s_small = solve_dare(&a, &c, &w, &v_small).unwrap();
        let s_large = solve_dare(&a, &c, &w, &v_large).unwrap();
        assert!(s_large.trace() > s_small.trace());
        // a-posteriori traces are ordered the same way
        let p_small = posterior_cov(&s_small, &c, &v_small).unwrap();
        let p_large = posterior_cov(&s_large, &c, &v_large).unwrap();
        assert!(p_large.trace() > p_small.trace());
    }

    #[test]
    fn posterior_without_measurement_is_prior() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = DMatrix::zeros(2, 2);
        let v = DMatrix::<f64>::identity(2, 2);
        let post = posterior_cov(&sigma, &c, &v).unwrap();
        assert_relative_eq!(frob_dist(&post, &sigma), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn posterior_perfect_measurement_vanishes() {
        let sigma = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let c = DMatrix::<f64>::identity(2, 2);
        let v = DMatrix::<f64>::identity(2, 2) * 1e-12;
        let post = posterior_cov(&sigma, &c, &v).unwrap();
        assert!(post.trace() < 1e-10, "trace {}", post.trace());
    }

    #[test]
    fn posterior_scalar_hand_case() {
        // sigma = 2, c = 1, v = 2: sigma_bar = 2 - 4/4 = 1
        let post = posterior_cov(&m1(2.0), &m1(1.0), &m1(2.0)).unwrap();
        assert_relative_eq!(post[(0, 0)], 1.0, epsilon = 1e-12);
    }

    fn scalar_filter(a: f64, w: f64, v: f64, x0: f64) -> HubFilter {
        HubFilter::new(m1(a), m1(1.0), m1(1.0), &m1(w), &m1(v), DVector::from_element(1, x0))
            .unwrap()
    }

    #[test]
    fn predict_is_affine_map() {
        // identity dynamics, zero input: estimate unchanged
        let f = scalar_filter(1.0, 1.0, 1.0, 3.0);
        assert_relative_eq!(f.predict(&DVector::zeros(1))[0], 3.0, epsilon = 1e-12);
        // x̂ = 0, b = I: prediction is the input
        let f0 = scalar_filter(1.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(f0.predict(&DVector::from_element(1, 2.5))[0], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn predict_generic_two_state() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.5]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let f = HubFilter::new(
            a,
            b,
            DMatrix::<f64>::identity(2, 2),
            &(DMatrix::<f64>::identity(2, 2) * 0.1),
            &(DMatrix::<f64>::identity(2, 2) * 0.1),
            DVector::from_column_slice(&[2.0, -1.0]),
        )
        .unwrap();
        let prior = f.predict(&DVector::from_element(1, 3.0));
        // hand arithmetic: [0.5*2 + 1*(-1), 0.5*(-1) + 3] = [0, 2.5]
        assert_relative_eq!(prior[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(prior[1], 2.5, epsilon = 1e-12);
    }

    #[test]
    fn update_zero_innovation_keeps_prior() {
        let mut f = scalar_filter(0.8, 0.5, 0.7, 1.0);
        let prior = f.predict(&DVector::zeros(1));
        let y = prior.clone(); // measurement equals predicted output
        let est = f.update(prior.clone(), &y).clone();
        assert_relative_eq!(est[0], prior[0], epsilon = 1e-12);
    }

    #[test]
    fn update_scalar_gain_half() {
        // from the posterior hand case: sigma_bar = 1, v = 2 would give gain
        // 0.5; build the same situation through the DARE with a = 0:
        // sigma = w = 2, sigma_bar = 2 - 4/4 = 1, gain = 1/2
        let mut f = scalar_filter(0.0, 2.0, 2.0, 0.0);
        assert_relative_eq!(f.gain()[(0, 0)], 0.5, epsilon = 1e-9);
        let prior = f.predict(&DVector::zeros(1));
        let est = f.update(prior, &DVector::from_element(1, 4.0)).clone();
        // innovation 4, scaled by 0.5
        assert_relative_eq!(est[0], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn mse_bounds_cases() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let b = mse_bounds(&i2, 2.0, 2.0);
        assert_relative_eq!(b.lower, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b.upper, 2.0, epsilon = 1e-12);

        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let b = mse_bounds(&m, 2.0, 2.0);
        // tr(m * I2) = 4 must sit inside [1*2, 3*2]
        assert!(b.lower <= 4.0 && 4.0 <= b.upper);

        let zero = DMatrix::zeros(2, 2);
        let b = mse_bounds(&zero, 2.0, 5.0);
        assert_relative_eq!(b.lower, 0.0, epsilon = 1e-12);
        assert_relative_eq!(b.upper, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn markov_bound_cases() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let sb = DMatrix::<f64>::identity(2, 2) * 0.5;
        // beta equal to the trace saturates at 1
        assert_relative_eq!(markov_bound(&i2, &sb, 1.0).unwrap(), 1.0, epsilon = 1e-12);
        // large beta drives the bound to zero
        assert!(markov_bound(&i2, &sb, 1e12).unwrap() < 1e-11);
        assert_relative_eq!(markov_bound(&i2, &sb, 10.0).unwrap(), 0.1, epsilon = 1e-12);
        assert!(markov_bound(&i2, &sb, 0.0).is_err());
    }

    #[test]
    fn beta_gamma_round_trip() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let sb = DMatrix::<f64>::identity(2, 2) * 0.5;
        let beta = beta_for_gamma(&i2, &sb, 0.5).unwrap();
        assert_relative_eq!(beta, 2.0, epsilon = 1e-12);
        // gamma = 0.95, tr = 0.1
        let sb2 = DMatrix::<f64>::identity(2, 2) * 0.05;
        assert_relative_eq!(beta_for_gamma(&i2, &sb2, 0.95).unwrap(), 2.0, epsilon = 1e-12);
        // markov(beta_for_gamma(gamma)) = 1 - gamma exactly
        for gamma in [0.5, 0.9, 0.95, 0.99] {
            let beta = beta_for_gamma(&i2, &sb, gamma).unwrap();
            assert_relative_eq!(
                markov_bound(&i2, &sb, beta).unwrap(),
                1.0 - gamma,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn filter_self_simulation_mse_matches_trace() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};

        // simulate the filter on its own model and compare the sample MSE to
        // tr(sigma_bar) over 10^4 steps
        let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.3, 0.0, 0.8]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let c = DMatrix::<f64>::identity(2, 2);
        let w = DMatrix::from_row_slice(2, 2, &[0.3, 0.05, 0.05, 0.2]);
        let v = DMatrix::<f64>::identity(2, 2) * 0.6;
        let mut filter =
            HubFilter::new(a.clone(), b.clone(), c.clone(), &w, &v, DVector::zeros(2)).unwrap();
        let lw = crate::matrix::psd_factor(&w);
        let lv = crate::matrix::psd_factor(&v);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        let mut draw = |l: &DMatrix<f64>| {
            let z = DVector::from_fn(2, |_, _| StandardNormal.sample(&mut rng));
            l * z
        };
        let mut x = DVector::<f64>::zeros(2);
        let steps = 10_000;
        let burn_in = 200;
        let mut acc = 0.0;
        let u = DVector::from_element(1, 0.1);
        for k in 0..steps + burn_in {
            x = &a * &x + &b * &u + draw(&lw);
            let y = &c * &x + draw(&lv);
            filter.step(&u, &y);
            if k >= burn_in {
                acc += (&x - filter.estimate()).norm_squared();
            }
        }
        let mse = acc / steps as f64;
        let expect = filter.sigma_bar().trace();
        assert!(
            (mse - expect).abs() / expect < 0.10,
            "sample MSE {mse}, tr sigma_bar {expect}"
        );
    }
}
