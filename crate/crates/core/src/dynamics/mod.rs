//! Agent dynamics: continuous LTI models, exact zero-order-hold
//! discretization (including the process-noise integral), block-diagonal
//! network aggregation, and stochastic simulation.

mod unicycle;

pub use unicycle::{
    build_unicycle_agent, recover_wheel_commands, simulate_unicycle_kinematics, UnicycleState,
    WheelCommands, V_FLOOR,
};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::matrix::{block_diag, psd_factor, symmetrize};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
    #[error("step size must be positive, got {0}")]
    BadStep(f64),
    #[error("non-finite entry in system matrices")]
    NonFinite,
    #[error("cannot aggregate an empty agent list")]
    EmptyNetwork,
}

/// Continuous-time linear stochastic model
/// `dx = (a x + b u) dt + upsilon dw`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLTI {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub upsilon: DMatrix<f64>,
}

impl ContinuousLTI {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        upsilon: DMatrix<f64>,
    ) -> Result<Self, DynamicsError> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || upsilon.nrows() != n {
            return Err(DynamicsError::Dimensions(format!(
                "a {:?}, b {:?}, upsilon {:?}",
                a.shape(),
                b.shape(),
                upsilon.shape()
            )));
        }
        if a.iter().chain(b.iter()).chain(upsilon.iter()).any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite);
        }
        Ok(ContinuousLTI { a, b, upsilon })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Model with the prefeedback `u = k x + ζ` folded into the drift.
    pub fn with_feedback(&self, k: &DMatrix<f64>) -> ContinuousLTI {
        ContinuousLTI {
            a: &self.a + &self.b * k,
            b: self.b.clone(),
            upsilon: self.upsilon.clone(),
        }
    }
}

/// Sampled model `x[k+1] = a x[k] + b u[k] + w[k]`, `w ~ N(0, w_cov)`,
/// with output map `y = c x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLTI {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub w_cov: DMatrix<f64>,
    pub dt: f64,
    /// Cached factor `l lᵀ = w_cov` for noise sampling.
    noise_factor: DMatrix<f64>,
}

impl DiscreteLTI {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        w_cov: DMatrix<f64>,
        dt: f64,
    ) -> Result<Self, DynamicsError> {
        if dt <= 0.0 {
            return Err(DynamicsError::BadStep(dt));
        }
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || w_cov.shape() != (n, n) {
            return Err(DynamicsError::Dimensions(format!(
                "a {:?}, b {:?}, c {:?}, w {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                w_cov.shape()
            )));
        }
        let w_cov = symmetrize(&w_cov);
        let noise_factor = psd_factor(&w_cov);
        Ok(DiscreteLTI { a, b, c, w_cov, dt, noise_factor })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// Noiseless step `a x + b u`.
    pub fn step_nominal(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    /// Stochastic step `a x + b u + w` with `w ~ N(0, w_cov)` drawn from the
    /// caller's generator.
    pub fn step_stochastic<R: rand::Rng>(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        rng: &mut R,
    ) -> DVector<f64> {
        self.step_nominal(x, u) + self.sample_noise(rng)
    }

    pub fn sample_noise<R: rand::Rng>(&self, rng: &mut R) -> DVector<f64> {
        let n = self.state_dim();
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        &self.noise_factor * z
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// Exact zero-order-hold discretization.
///
/// `a_d = exp(a dt)`; `b_d = ∫ exp(a s) ds · b` through the augmented
/// exponential of `[[a, b], [0, 0]]`; the per-step noise covariance through
/// the Van Loan construction `exp([[-a, υυᵀ], [0, aᵀ]] dt)`, whose upper
/// right block left-multiplied by the transposed lower right gives
/// `∫ exp(a s) υυᵀ exp(aᵀ s) ds`.
pub fn discretize(
    sys: &ContinuousLTI,
    c: DMatrix<f64>,
    dt: f64,
) -> Result<DiscreteLTI, DynamicsError> {
    if dt <= 0.0 {
        return Err(DynamicsError::BadStep(dt));
    }
    let n = sys.state_dim();
    let m = sys.input_dim();

    // [[a, b], [0, 0]] * dt -> exp gives [[a_d, b_d], [0, I]]
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&sys.a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(&sys.b * dt));
    let e = aug.exp();
    let a_d = e.view((0, 0), (n, n)).into_owned();
    let b_d = e.view((0, n), (n, m)).into_owned();

    // Van Loan block matrix for the noise integral
    let q = &sys.upsilon * sys.upsilon.transpose();
    let mut vl = DMatrix::zeros(2 * n, 2 * n);
    vl.view_mut((0, 0), (n, n)).copy_from(&(-&sys.a * dt));
    vl.view_mut((0, n), (n, n)).copy_from(&(&q * dt));
    vl.view_mut((n, n), (n, n)).copy_from(&(sys.a.transpose() * dt));
    let evl = vl.exp();
    let f12 = evl.view((0, n), (n, n)).into_owned();
    let f22 = evl.view((n, n), (n, n)).into_owned();
    let w_cov = symmetrize(&(f22.transpose() * f12));

    DiscreteLTI::new(a_d, b_d, c, w_cov, dt)
}

/// Block-diagonal aggregation of per-agent models with recorded state,
/// input, and output offsets.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub agents: Vec<DiscreteLTI>,
    pub aggregate: DiscreteLTI,
    state_offsets: Vec<usize>,
    input_offsets: Vec<usize>,
    output_offsets: Vec<usize>,
}

impl NetworkModel {
    pub fn aggregate(agents: Vec<DiscreteLTI>) -> Result<NetworkModel, DynamicsError> {
        if agents.is_empty() {
            return Err(DynamicsError::EmptyNetwork);
        }
        let dt = agents[0].dt;
        if agents.iter().any(|a| (a.dt - dt).abs() > 1e-12 * dt.abs()) {
            return Err(DynamicsError::Dimensions("mixed sampling periods".into()));
        }
        let collect =
            |f: fn(&DiscreteLTI) -> &DMatrix<f64>| agents.iter().map(f).cloned().collect::<Vec<_>>();
        let a = block_diag(&collect(|m| &m.a));
        let b = block_diag(&collect(|m| &m.b));
        let c = block_diag(&collect(|m| &m.c));
        let w = block_diag(&collect(|m| &m.w_cov));
        let mut state_offsets = Vec::with_capacity(agents.len());
        let mut input_offsets = Vec::with_capacity(agents.len());
        let mut output_offsets = Vec::with_capacity(agents.len());
        let (mut so, mut io, mut oo) = (0, 0, 0);
        for m in &agents {
            state_offsets.push(so);
            input_offsets.push(io);
            output_offsets.push(oo);
            so += m.state_dim();
            io += m.input_dim();
            oo += m.output_dim();
        }
        let aggregate = DiscreteLTI::new(a, b, c, w, dt)?;
        Ok(NetworkModel { agents, aggregate, state_offsets, input_offsets, output_offsets })
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn state_dim(&self) -> usize {
        self.aggregate.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.aggregate.input_dim()
    }

    pub fn state_offset(&self, agent: usize) -> usize {
        self.state_offsets[agent]
    }

    pub fn input_offset(&self, agent: usize) -> usize {
        self.input_offsets[agent]
    }

    pub fn output_offset(&self, agent: usize) -> usize {
        self.output_offsets[agent]
    }

    pub fn agent_state<'a>(&self, x: &'a DVector<f64>, agent: usize) -> DVector<f64> {
        let off = self.state_offsets[agent];
        x.rows(off, self.agents[agent].state_dim()).into_owned()
    }

    pub fn agent_input(&self, u: &DVector<f64>, agent: usize) -> DVector<f64> {
        let off = self.input_offsets[agent];
        u.rows(off, self.agents[agent].input_dim()).into_owned()
    }

    /// Aggregate stochastic step with one independent generator per agent,
    /// so an agent's noise stream is identical whether it is simulated alone
    /// or as part of the network.
    pub fn step_stochastic_per_agent<R: rand::Rng>(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        rngs: &mut [R],
    ) -> DVector<f64> {
        assert_eq!(rngs.len(), self.agents.len(), "one generator per agent");
        let mut next = self.aggregate.step_nominal(x, u);
        for (i, model) in self.agents.iter().enumerate() {
            let w = model.sample_noise(&mut rngs[i]);
            let off = self.state_offsets[i];
            for j in 0..model.state_dim() {
                next[off + j] += w[j];
            }
        }
        next
    }
}
