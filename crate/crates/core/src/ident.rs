//! Online identification of `(A, B)` from excitation rollouts: the
//! least-squares and the value-weighted (task-relevant) SGD procedures.

use std::hash::{DefaultHasher, Hash, Hasher};

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lqr::{self, LqrProblem, SystemParams, ValueMatrix};
use crate::rng::{self, Rng};

/// Rejection-sampling budget for [`random_system`].
pub const RANDOM_SYSTEM_MAX_ATTEMPTS: usize = 10_000;
pub const CONTROLLABILITY_RANK_TOL: f64 = 1e-10;
/// Entry ranges of the random plant: `a_ij ~ U[0, A_MAX]`, `b_ij ~ U[0, B_MAX]`.
pub const A_MAX: f64 = 0.3;
pub const B_MAX: f64 = 0.1;

const TRAJECTORY_STREAM: u64 = 0x7472616a;

/// Rollout `(x_0, u_0, ..., x_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<DVector<f64>>,
    inputs: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(states: Vec<DVector<f64>>, inputs: Vec<DVector<f64>>) -> Result<Self> {
        if states.len() != inputs.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} inputs",
                states.len(),
                inputs.len()
            )));
        }
        let n = states[0].len();
        if states.iter().any(|x| x.len() != n) {
            return Err(Error::DimensionMismatch("states have mixed dimensions".into()));
        }
        if let Some(m) = inputs.first().map(|u| u.len()) {
            if inputs.iter().any(|u| u.len() != m) {
                return Err(Error::DimensionMismatch("inputs have mixed dimensions".into()));
            }
        }
        Ok(Self { states, inputs })
    }

    /// Runs `x_{k+1} = Ax_k + Bu_k` from `x0` under the given inputs.
    pub fn rollout(sys: &SystemParams, x0: DVector<f64>, inputs: Vec<DVector<f64>>) -> Result<Self> {
        if x0.len() != sys.n() || inputs.iter().any(|u| u.len() != sys.m()) {
            return Err(Error::DimensionMismatch("rollout inputs do not match the system".into()));
        }
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(x0);
        for u in &inputs {
            let next = sys.step(states.last().unwrap(), u);
            states.push(next);
        }
        Ok(Self { states, inputs })
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    /// Number of transitions `N`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.states[0].len()
    }

    /// Regressors `Z = [z_0 ... z_{N-1}]` with `z_k = [x_k; u_k]`, and targets
    /// `X' = [x_1 ... x_N]`.
    pub fn regressors(&self) -> (Mat, Mat) {
        let n = self.state_dim();
        let m = self.inputs.first().map_or(0, |u| u.len());
        let len = self.len();
        let mut z = Mat::zeros(n + m, len);
        let mut next = Mat::zeros(n, len);
        for k in 0..len {
            z.view_mut((0, k), (n, 1)).copy_from(&self.states[k]);
            z.view_mut((n, k), (m, 1)).copy_from(&self.inputs[k]);
            next.column_mut(k).copy_from(&self.states[k + 1]);
        }
        (z, next)
    }
}

/// Draws a rollout of length `n_steps` from `x_0 = 0` under i.i.d.
/// `N(0, sigma_u^2 I)` inputs.
pub fn simulate_trajectory(sys_true: &SystemParams, prob: &LqrProblem, n_steps: usize, rng: &mut Rng) -> Trajectory {
    let m = sys_true.m();
    let inputs = (0..n_steps)
        .map(|_| DVector::from_fn(m, |_, _| prob.sigma_u * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    Trajectory::rollout(sys_true, DVector::zeros(sys_true.n()), inputs).expect("dimensions come from the system")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Ols,
    Tr,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ols => "OLS",
            Method::Tr => "TR",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    /// Ridge coefficient.
    pub lambda: f64,
    /// Base stepsize.
    pub alpha0: f64,
    /// Schedule offset: `alpha_i = alpha0 (1 + i)^-(1/2 + eps)`.
    pub eps: f64,
    pub iterations: usize,
    pub traj_len: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-5,
            alpha0: 1e-2,
            eps: 0.05,
            iterations: 200,
            traj_len: 10,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha0 = {} must be > 0", self.alpha0)));
        }
        // eps in (0, 1/2] keeps the schedule square-summable but not summable
        if !(self.eps > 0.0 && self.eps <= 0.5) {
            return Err(Error::InvalidConfig(format!("eps = {} must lie in (0, 0.5]", self.eps)));
        }
        if self.traj_len == 0 {
            return Err(Error::InvalidConfig("traj_len must be >= 1".into()));
        }
        Ok(())
    }

    pub fn step_size(&self, i: usize) -> f64 {
        self.alpha0 * (1.0 + i as f64).powf(-(0.5 + self.eps))
    }
}

/// Policy gap of the certainty-equivalent controller on the true plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Suboptimality {
    Value(f64),
    /// The controller does not stabilize the true discounted system.
    Unstable,
}

impl Suboptimality {
    pub fn value(self) -> Option<f64> {
        match self {
            Suboptimality::Value(v) => Some(v),
            Suboptimality::Unstable => None,
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Suboptimality::Value(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Hash of the bit pattern of `Theta^(i+1)`.
    pub theta_digest: u64,
    /// `||Theta^(i+1) - Theta*||_2`.
    pub model_error: f64,
    pub suboptimality: Suboptimality,
    /// Training loss on this iteration's rollout, before the step.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunHistory {
    pub method: Method,
    pub seed: u64,
    pub initial_model_error: f64,
    pub initial_suboptimality: Suboptimality,
    pub records: Vec<IterationRecord>,
    pub final_theta: Mat,
}

impl RunHistory {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }
}

fn check_theta(theta: &Mat, tau: &Trajectory) -> Result<()> {
    let n = tau.state_dim();
    let width = n + tau.inputs().first().map_or(theta.ncols().saturating_sub(n), |u| u.len());
    if theta.nrows() != n || theta.ncols() != width {
        return Err(Error::DimensionMismatch(format!(
            "theta is {}x{}, trajectory needs {n}x{width}",
            theta.nrows(),
            theta.ncols()
        )));
    }
    Ok(())
}

fn check_value(p: &ValueMatrix, n: usize) -> Result<()> {
    if p.dim() != n {
        return Err(Error::DimensionMismatch(format!("P is {0}x{0}, state dimension is {n}", p.dim())));
    }
    Ok(())
}

fn ridge(theta: &Mat, lambda: f64) -> f64 {
    lambda * theta.norm_squared()
}

pub(crate) fn ols_loss_mat(theta: &Mat, z: &Mat, next: &Mat, lambda: f64) -> f64 {
    let data = if z.ncols() == 0 {
        0.0
    } else {
        (next - theta * z).norm_squared() / z.ncols() as f64
    };
    data + ridge(theta, lambda)
}

pub(crate) fn ols_grad_mat(theta: &Mat, z: &Mat, next: &Mat, lambda: f64) -> Mat {
    let mut g = theta * (2.0 * lambda);
    if z.ncols() > 0 {
        let resid = next - theta * z;
        g -= resid * z.transpose() * (2.0 / z.ncols() as f64);
    }
    g
}

/// Per-step value residuals `e_k = x'_k P x'_k - y_k P y_k`, `y_k = Theta z_k`,
/// together with `P Y`.
fn value_residuals(theta: &Mat, z: &Mat, next: &Mat, p: &Mat) -> (Vec<f64>, Mat, Mat) {
    let y = theta * z;
    let py = p * &y;
    let pnext = p * next;
    let e = (0..z.ncols())
        .map(|k| next.column(k).dot(&pnext.column(k)) - y.column(k).dot(&py.column(k)))
        .collect();
    (e, y, py)
}

pub(crate) fn tr_loss_mat(theta: &Mat, z: &Mat, next: &Mat, p: &Mat, lambda: f64) -> f64 {
    let data = if z.ncols() == 0 {
        0.0
    } else {
        let (e, _, _) = value_residuals(theta, z, next, p);
        e.iter().map(|v| v.abs()).sum::<f64>() / z.ncols() as f64
    };
    data + ridge(theta, lambda)
}

pub(crate) fn tr_subgrad_mat(theta: &Mat, z: &Mat, next: &Mat, p: &Mat, lambda: f64) -> Mat {
    let mut g = theta * (2.0 * lambda);
    let len = z.ncols();
    if len > 0 {
        let (e, _, mut py) = value_residuals(theta, z, next, p);
        for (k, ek) in e.iter().enumerate() {
            // sign(0) = 0 keeps the exact minimizer a fixed point
            let s = if *ek > 0.0 {
                1.0
            } else if *ek < 0.0 {
                -1.0
            } else {
                0.0
            };
            py.column_mut(k).scale_mut(s);
        }
        g -= py * z.transpose() * (2.0 / len as f64);
    }
    g
}

/// `(1/N) sum ||x_{k+1} - Theta z_k||^2 + lambda ||Theta||_F^2`.
pub fn ols_loss(theta: &SystemParams, tau: &Trajectory, lambda: f64) -> Result<f64> {
    let t = theta.theta();
    check_theta(&t, tau)?;
    let (z, next) = tau.regressors();
    Ok(ols_loss_mat(&t, &z, &next, lambda))
}

/// Exact gradient of [`ols_loss`] with respect to the stacked `Theta`.
pub fn ols_grad(theta: &SystemParams, tau: &Trajectory, lambda: f64) -> Result<Mat> {
    let t = theta.theta();
    check_theta(&t, tau)?;
    let (z, next) = tau.regressors();
    Ok(ols_grad_mat(&t, &z, &next, lambda))
}

/// `(1/N) sum |x'_k P x'_k - (Theta z_k)' P (Theta z_k)| + lambda ||Theta||_F^2`.
pub fn tr_loss(theta: &SystemParams, tau: &Trajectory, p: &ValueMatrix, lambda: f64) -> Result<f64> {
    let t = theta.theta();
    check_theta(&t, tau)?;
    check_value(p, t.nrows())?;
    let (z, next) = tau.regressors();
    Ok(tr_loss_mat(&t, &z, &next, p.matrix(), lambda))
}

/// Subgradient of [`tr_loss`]: `-(2/N) sum sign(e_k) P Theta z_k z_k' + 2 lambda Theta`.
pub fn tr_subgrad(theta: &SystemParams, tau: &Trajectory, p: &ValueMatrix, lambda: f64) -> Result<Mat> {
    let t = theta.theta();
    check_theta(&t, tau)?;
    check_value(p, t.nrows())?;
    let (z, next) = tau.regressors();
    Ok(tr_subgrad_mat(&t, &z, &next, p.matrix(), lambda))
}

fn digest(m: &Mat) -> u64 {
    let mut h = DefaultHasher::new();
    m.shape().hash(&mut h);
    for v in m.iter() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Gap of the certainty-equivalent controller for `model` (with value `p`)
/// on `sys_true`.
pub fn certainty_equivalent_gap(
    sys_true: &SystemParams,
    prob: &LqrProblem,
    model: &SystemParams,
    p: &ValueMatrix,
    p_star: &ValueMatrix,
) -> Suboptimality {
    let gap = lqr::gain_from_value(model, prob, p)
        .and_then(|k| lqr::evaluate_policy(sys_true, prob, &k))
        .and_then(|p_pi| lqr::suboptimality(&p_pi, p_star));
    match gap {
        Ok(v) if v.is_finite() => Suboptimality::Value(v),
        _ => Suboptimality::Unstable,
    }
}

/// Runs OLS-SGD or TR-SGD from `theta0` against fresh rollouts of `sys_true`.
///
/// Rollouts come from the stream keyed by `cfg.seed`, so both methods see the
/// same data for the same seed. The value matrix of each iterate is the DARE
/// solution of that iterate; when the iterate is not stabilizable the last
/// successful solution is kept (falling back to `Q`).
pub fn run_sgd(
    method: Method,
    sys_true: &SystemParams,
    prob: &LqrProblem,
    theta0: &SystemParams,
    cfg: &SgdConfig,
) -> Result<RunHistory> {
    cfg.validate()?;
    if theta0.n() != sys_true.n() || theta0.m() != sys_true.m() {
        return Err(Error::DimensionMismatch("theta0 does not match the true system".into()));
    }
    let n = sys_true.n();
    let p_star = lqr::solve_dare(sys_true, prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER)?;
    let theta_star = sys_true.theta();
    let mut rng = rng::stream(cfg.seed, TRAJECTORY_STREAM);

    let mut theta = theta0.theta();
    let mut p_cur = lqr::solve_dare(theta0, prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER)
        .unwrap_or_else(|_| ValueMatrix::from_symmetrized(&prob.q));
    let initial_suboptimality = certainty_equivalent_gap(sys_true, prob, theta0, &p_cur, &p_star);

    let mut records = Vec::with_capacity(cfg.iterations);
    for i in 0..cfg.iterations {
        let tau = simulate_trajectory(sys_true, prob, cfg.traj_len, &mut rng);
        let (z, next) = tau.regressors();
        let (loss, grad) = match method {
            Method::Ols => (
                ols_loss_mat(&theta, &z, &next, cfg.lambda),
                ols_grad_mat(&theta, &z, &next, cfg.lambda),
            ),
            Method::Tr => (
                tr_loss_mat(&theta, &z, &next, p_cur.matrix(), cfg.lambda),
                tr_subgrad_mat(&theta, &z, &next, p_cur.matrix(), cfg.lambda),
            ),
        };
        theta -= grad * cfg.step_size(i);

        let (model_error, gap) = match SystemParams::from_theta(&theta, n) {
            Ok(model) => {
                if let Ok(p) = lqr::solve_dare(&model, prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER) {
                    p_cur = p;
                }
                let err = linalg::spectral_norm(&(&theta - &theta_star));
                (err, certainty_equivalent_gap(sys_true, prob, &model, &p_cur, &p_star))
            }
            // diverged iterate
            Err(_) => (f64::INFINITY, Suboptimality::Unstable),
        };
        records.push(IterationRecord {
            iteration: i,
            theta_digest: digest(&theta),
            model_error,
            suboptimality: gap,
            loss,
        });
    }

    Ok(RunHistory {
        method,
        seed: cfg.seed,
        initial_model_error: linalg::spectral_norm(&(theta0.theta() - &theta_star)),
        initial_suboptimality,
        records,
        final_theta: theta,
    })
}

/// Samples `a_ij ~ U[0, 0.3]`, `b_ij ~ U[0, 0.1]` until `(A, B)` is
/// controllable and `A` is unstable.
pub fn random_system(n: usize, m: usize, rng: &mut Rng) -> Result<SystemParams> {
    random_system_with_budget(n, m, rng, RANDOM_SYSTEM_MAX_ATTEMPTS)
}

pub fn random_system_with_budget(n: usize, m: usize, rng: &mut Rng, max_attempts: usize) -> Result<SystemParams> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig("n and m must be >= 1".into()));
    }
    for _ in 0..max_attempts {
        let a = Mat::from_fn(n, n, |_, _| rng.random_range(0.0..=A_MAX));
        let b = Mat::from_fn(n, m, |_, _| rng.random_range(0.0..=B_MAX));
        // cheap row-sum bound first: for a nonnegative matrix rho(A) <= max row sum
        let max_row: f64 = a.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
        if max_row <= 1.0 || lqr::spectral_radius(&a) <= 1.0 {
            continue;
        }
        let sys = SystemParams::new(a, b)?;
        if lqr::is_controllable(&sys, CONTROLLABILITY_RANK_TOL) {
            return Ok(sys);
        }
    }
    Err(Error::GenerationFailed { attempts: max_attempts })
}

fn random_unit(len: usize, rng: &mut Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// `Theta + magnitude * u v'` with random unit vectors `u`, `v`.
pub fn rank_one_perturb(theta: &SystemParams, magnitude: f64, rng: &mut Rng) -> Result<SystemParams> {
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(Error::InvalidConfig(format!("perturbation magnitude {magnitude} must be > 0")));
    }
    let t = theta.theta();
    let u = random_unit(t.nrows(), rng);
    let v = random_unit(t.ncols(), rng);
    SystemParams::from_theta(&(t + u * v.transpose() * magnitude), theta.n())
}
