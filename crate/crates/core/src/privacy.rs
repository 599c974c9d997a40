//! Differential-privacy noise calibration and the input-perturbation
//! Gaussian mechanism each agent applies to its own outputs before sharing
//! them with its local hub.
//!
//! The noise scale is the smallest standard deviation that still delivers
//! the requested (ε, δ) guarantee for the declared adjacency radius, so the
//! hubs see the best estimation quality the privacy level allows.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::largest_singular_value;

#[derive(Debug, Error)]
pub enum PrivacyError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("delta must lie in (0, 1/2), got {0}")]
    BadDelta(f64),
    #[error("adjacency radius must be positive, got {0}")]
    BadNu(f64),
    #[error("sensitivity must be positive, got {0}")]
    BadSensitivity(f64),
    #[error("q_inverse argument must lie in (0, 1), got {0}")]
    BadTailProbability(f64),
    #[error("output has dimension {got}, mechanism expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Per-agent privacy selection: (ε, δ) and the ℓ₂ adjacency radius ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    /// ℓ₂ radius of the trajectory ball the agent's real trajectory must be
    /// indistinguishable from.
    pub nu: f64,
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<(), PrivacyError> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(PrivacyError::BadEpsilon(self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return Err(PrivacyError::BadDelta(self.delta));
        }
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(PrivacyError::BadNu(self.nu));
        }
        Ok(())
    }
}

/// Gaussian tail probability `Q(y) = P[Z >= y]` for standard normal `Z`,
/// evaluated through the complementary error function.
pub fn q_function(y: f64) -> f64 {
    0.5 * libm::erfc(y / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] by bisection on the monotone tail. The result
/// satisfies `|Q(y) - p| <= 1e-12` for p away from the extreme underflow
/// region.
pub fn q_inverse(p: f64) -> Result<f64, PrivacyError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(PrivacyError::BadTailProbability(p));
    }
    // Q is strictly decreasing; Q(-40) ~ 1, Q(40) ~ 1e-350
    let mut lo = -40.0f64;
    let mut hi = 40.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if q_function(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Upper bound on the ℓ₂ sensitivity of an output map `y = c x` over
/// trajectories within adjacency radius `nu`: largest singular value of `c`
/// times `nu`. The exact supremum is not computable here; this bound is the
/// one used for calibration.
pub fn sensitivity_bound(c: &DMatrix<f64>, nu: f64) -> Result<f64, PrivacyError> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(PrivacyError::BadNu(nu));
    }
    Ok(largest_singular_value(c) * nu)
}

/// Minimal Gaussian noise standard deviation delivering (ε, δ)-differential
/// privacy at ℓ₂ sensitivity `delta_l2`:
/// `σ = (Δ / 2ε) (ι_δ + sqrt(ι_δ² + 2ε))` with `ι_δ = Q⁻¹(δ)`.
pub fn gaussian_sigma(delta_l2: f64, eps: f64, delta: f64) -> Result<f64, PrivacyError> {
    if !(delta_l2 > 0.0) || !delta_l2.is_finite() {
        return Err(PrivacyError::BadSensitivity(delta_l2));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(PrivacyError::BadEpsilon(eps));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(PrivacyError::BadDelta(delta));
    }
    let iota = q_inverse(delta)?;
    Ok(delta_l2 / (2.0 * eps) * (iota + (iota * iota + 2.0 * eps).sqrt()))
}

/// Additive i.i.d. Gaussian output noise `v[k] ~ N(0, σ² I_q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMechanism {
    sigma: f64,
    dim: usize,
}

impl GaussianMechanism {
    /// Mechanism calibrated at the minimal σ for `(params, c)`.
    pub fn calibrated(
        c: &DMatrix<f64>,
        params: &PrivacyParams,
    ) -> Result<GaussianMechanism, PrivacyError> {
        params.validate()?;
        let delta_l2 = sensitivity_bound(c, params.nu)?;
        let sigma = gaussian_sigma(delta_l2, params.epsilon, params.delta)?;
        Ok(GaussianMechanism { sigma, dim: c.nrows() })
    }

    /// Disabled mechanism (σ = 0): outputs pass through unchanged and no
    /// privacy is provided.
    pub fn disabled(dim: usize) -> GaussianMechanism {
        GaussianMechanism { sigma: 0.0, dim }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Privacy covariance `V = σ² I_q`.
    pub fn covariance(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * (self.sigma * self.sigma)
    }
}

/// `y + v` with `v ~ N(0, σ² I)` drawn from the agent's own generator.
/// Deterministic for a fixed generator state.
pub fn privatize<R: rand::Rng>(
    y: &DVector<f64>,
    mech: &GaussianMechanism,
    rng: &mut R,
) -> Result<DVector<f64>, PrivacyError> {
    if y.len() != mech.dim {
        return Err(PrivacyError::DimensionMismatch { expected: mech.dim, got: y.len() });
    }
    if mech.sigma == 0.0 {
        return Ok(y.clone());
    }
    let mut out = y.clone();
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v += mech.sigma * z;
    }
    Ok(out)
}
