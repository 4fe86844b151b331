//! Discounted LQR machinery: Riccati and Lyapunov solvers, certainty-equivalent
//! gain synthesis, controllability, and the value-suboptimality metric.
//!
//! Conventions: `P` is a cost-to-go (`V(x) = -x'Px`, `P >= 0`), the control law
//! is `u = Kx` with the minus sign carried inside `K`, so the closed loop is
//! `A + BK`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

pub use crate::linalg::spectral_radius;

/// Default Frobenius residual tolerance for the Riccati iteration.
pub const DARE_TOL: f64 = 1e-10;
pub const DARE_MAX_ITER: usize = 100_000;
/// Largest state dimension solved through the vectorized Kronecker system.
pub const LYAPUNOV_DIRECT_MAX_N: usize = 64;

const BLOWUP: f64 = 1e14;

/// Model parameters `(A, B)`, equivalently the stacked `Theta = [A B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    a: Mat,
    b: Mat,
}

impl SystemParams {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows, A has {}",
                b.nrows(),
                a.nrows()
            )));
        }
        if !linalg::all_finite(&a) || !linalg::all_finite(&b) {
            return Err(Error::InvalidConfig("system matrices must be finite".into()));
        }
        Ok(Self { a, b })
    }

    /// Splits an `n x (n+m)` stacked matrix into `(A, B)`.
    pub fn from_theta(theta: &Mat, n: usize) -> Result<Self> {
        if theta.nrows() != n || theta.ncols() < n {
            return Err(Error::DimensionMismatch(format!(
                "theta is {}x{}, expected {n} rows and at least {n} columns",
                theta.nrows(),
                theta.ncols()
            )));
        }
        Self::new(
            theta.columns(0, n).into_owned(),
            theta.columns(n, theta.ncols() - n).into_owned(),
        )
    }

    pub fn theta(&self) -> Mat {
        let (n, m) = (self.n(), self.m());
        let mut t = Mat::zeros(n, n + m);
        t.columns_mut(0, n).copy_from(&self.a);
        t.columns_mut(n, m).copy_from(&self.b);
        t
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn closed_loop(&self, k: &Gain) -> Mat {
        &self.a + &self.b * k.matrix()
    }

    /// `x' = Ax + Bu`.
    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }
}

/// Quadratic costs, discount and excitation scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrProblem {
    pub q: Mat,
    pub r: Mat,
    pub gamma: f64,
    pub sigma_u: f64,
}

impl LqrProblem {
    pub fn new(q: Mat, r: Mat, gamma: f64, sigma_u: f64) -> Result<Self> {
        let tol = 1e-10;
        if !linalg::is_symmetric(&q, tol * q.amax().max(1.0)) {
            return Err(Error::InvalidConfig("Q must be symmetric".into()));
        }
        if !linalg::is_symmetric(&r, tol * r.amax().max(1.0)) {
            return Err(Error::InvalidConfig("R must be symmetric".into()));
        }
        if q.nrows() > 0 && linalg::sym_eig_range(&q).0 < -tol {
            return Err(Error::InvalidConfig("Q must be positive semidefinite".into()));
        }
        if r.nrows() == 0 || linalg::sym_eig_range(&r).0 <= 0.0 {
            return Err(Error::InvalidConfig("R must be positive definite".into()));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!("gamma = {gamma} outside [0, 1]")));
        }
        if !(sigma_u >= 0.0 && sigma_u.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma_u = {sigma_u} must be >= 0")));
        }
        Ok(Self {
            q: linalg::symmetrize(&q),
            r: linalg::symmetrize(&r),
            gamma,
            sigma_u,
        })
    }

    /// `Q = I_n`, `R = I_m`.
    pub fn identity_costs(n: usize, m: usize, gamma: f64, sigma_u: f64) -> Result<Self> {
        Self::new(Mat::identity(n, n), Mat::identity(m, m), gamma, sigma_u)
    }

    fn check_dims(&self, sys: &SystemParams) -> Result<()> {
        if self.q.nrows() != sys.n() || self.r.nrows() != sys.m() {
            return Err(Error::DimensionMismatch(format!(
                "costs are Q {0}x{0}, R {1}x{1}; system has n = {2}, m = {3}",
                self.q.nrows(),
                self.r.nrows(),
                sys.n(),
                sys.m()
            )));
        }
        Ok(())
    }
}

/// Symmetric quadratic cost-to-go matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueMatrix(Mat);

impl ValueMatrix {
    /// Accepts a matrix that is symmetric up to rounding and stores its
    /// symmetric part.
    pub fn new(p: Mat) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::DimensionMismatch("value matrix must be square".into()));
        }
        if !linalg::is_symmetric(&p, 1e-8 * p.amax().max(1.0)) {
            return Err(Error::InvalidConfig("value matrix must be symmetric".into()));
        }
        Ok(Self(linalg::symmetrize(&p)))
    }

    pub(crate) fn from_symmetrized(p: &Mat) -> Self {
        Self(linalg::symmetrize(p))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn into_inner(self) -> Mat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `x'Px`.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }
}

/// Linear feedback gain, `u = Kx`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gain(Mat);

impl Gain {
    pub fn new(k: Mat) -> Self {
        Self(k)
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }
}

fn inner_factor(sys: &SystemParams, prob: &LqrProblem, p: &Mat) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let b = sys.b();
    let inner = &prob.r + (b.transpose() * p * b) * prob.gamma;
    Cholesky::new(linalg::symmetrize(&inner))
}

/// Right-hand side of the discounted Riccati equation,
/// `Q + g A'PA - g^2 A'PB (R + g B'PB)^-1 B'PA`.
pub fn riccati_rhs(sys: &SystemParams, prob: &LqrProblem, p: &Mat) -> Result<Mat> {
    prob.check_dims(sys)?;
    let (a, b, g) = (sys.a(), sys.b(), prob.gamma);
    let chol = inner_factor(sys, prob, p).ok_or(Error::SingularInnerMatrix)?;
    let pa = p * a;
    let bt_pa = b.transpose() * &pa;
    let correction = bt_pa.transpose() * chol.solve(&bt_pa);
    Ok(&prob.q + (a.transpose() * &pa) * g - correction * (g * g))
}

/// Solves the discounted DARE by the value recursion `P <- rhs(P)` from `P = Q`.
///
/// The recursion is first advanced by doubling (each step jumps from iterate
/// `j` to iterate `2j + 1` of the same sequence), then finished with plain
/// fixed-point steps until `||P - rhs(P)||_F <= tol`. Falls back to the plain
/// recursion from `Q` if doubling breaks down numerically.
pub fn solve_dare(sys: &SystemParams, prob: &LqrProblem, tol: f64, max_iter: usize) -> Result<ValueMatrix> {
    prob.check_dims(sys)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("DARE tolerance must be positive".into()));
    }
    match dare_doubling(sys, prob, tol) {
        Doubling::Converged(p) => fixed_point(sys, prob, p, tol, max_iter),
        Doubling::Diverged { residual } => Err(Error::NonConvergence { iterations: 0, residual }),
        Doubling::Breakdown => fixed_point(sys, prob, prob.q.clone(), tol, max_iter),
    }
}

/// The plain value recursion from `P = Q`, without doubling.
pub fn solve_dare_fixed_point(sys: &SystemParams, prob: &LqrProblem, tol: f64, max_iter: usize) -> Result<ValueMatrix> {
    prob.check_dims(sys)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("DARE tolerance must be positive".into()));
    }
    fixed_point(sys, prob, prob.q.clone(), tol, max_iter)
}

fn fixed_point(sys: &SystemParams, prob: &LqrProblem, start: Mat, tol: f64, max_iter: usize) -> Result<ValueMatrix> {
    let mut p = start;
    let mut residual = f64::INFINITY;
    let (mut best, mut best_at) = (f64::INFINITY, 0);
    for it in 0..max_iter {
        let next = linalg::symmetrize(&riccati_rhs(sys, prob, &p)?);
        residual = (&next - &p).norm();
        if residual <= tol {
            return Ok(ValueMatrix(p));
        }
        if residual < best {
            (best, best_at) = (residual, it);
        }
        // residual stuck at the rounding floor of a large P
        let stalled = it - best_at > STALL_ITERS;
        if !residual.is_finite() || next.norm() > BLOWUP || stalled {
            return Err(Error::NonConvergence { iterations: it + 1, residual });
        }
        p = next;
    }
    Err(Error::NonConvergence { iterations: max_iter, residual })
}

enum Doubling {
    Converged(Mat),
    Diverged { residual: f64 },
    Breakdown,
}

const MAX_DOUBLINGS: usize = 64;
const STALL_ITERS: usize = 100;

/// Structure-preserving doubling on the scaled pair `(sqrt(g) A, sqrt(g) B)`.
/// With `G_0 = B R^-1 B'` and `H_0 = Q`, `H_k` is iterate `2^k - 1` of the
/// value recursion started at `Q`.
fn dare_doubling(sys: &SystemParams, prob: &LqrProblem, tol: f64) -> Doubling {
    let n = sys.n();
    let g = prob.gamma;
    let Some(r_chol) = Cholesky::new(prob.r.clone()) else {
        return Doubling::Breakdown;
    };
    let b = sys.b() * g.sqrt();
    let mut a_k = sys.a() * g.sqrt();
    let mut g_k = &b * r_chol.solve(&b.transpose());
    let mut h_k = prob.q.clone();
    let eye = Mat::identity(n, n);
    for _ in 0..MAX_DOUBLINGS {
        let Some(w) = (&eye + &g_k * &h_k).lu().try_inverse() else {
            return Doubling::Breakdown;
        };
        let w_a = &w * &a_k;
        let h_next = linalg::symmetrize(&(&h_k + a_k.transpose() * &h_k * &w_a));
        let g_next = linalg::symmetrize(&(&g_k + &a_k * &w * &g_k * a_k.transpose()));
        a_k = &a_k * &w_a;
        let step = (&h_next - &h_k).norm();
        h_k = h_next;
        g_k = g_next;
        if !linalg::all_finite(&h_k) || !linalg::all_finite(&a_k) || !linalg::all_finite(&g_k) {
            return Doubling::Breakdown;
        }
        if h_k.norm() > BLOWUP {
            return Doubling::Diverged { residual: step };
        }
        if step <= 0.1 * tol || a_k.norm() <= f64::EPSILON {
            return Doubling::Converged(h_k);
        }
    }
    Doubling::Converged(h_k)
}

/// Certainty-equivalent gain `K = -g (R + g B'PB)^-1 B'PA`.
pub fn gain_from_value(sys: &SystemParams, prob: &LqrProblem, p: &ValueMatrix) -> Result<Gain> {
    prob.check_dims(sys)?;
    if p.dim() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "value matrix is {0}x{0}, state dimension is {1}",
            p.dim(),
            sys.n()
        )));
    }
    let chol = inner_factor(sys, prob, p.matrix()).ok_or(Error::SingularInnerMatrix)?;
    let bt_pa = sys.b().transpose() * p.matrix() * sys.a();
    Ok(Gain(chol.solve(&bt_pa) * (-prob.gamma)))
}

/// Solves `P = W + g A_cl' P A_cl`.
///
/// Uses the vectorized Kronecker system for `n <= 64` and Smith doubling above.
pub fn solve_lyapunov(a_cl: &Mat, w: &Mat, gamma: f64, tol: f64) -> Result<ValueMatrix> {
    check_lyapunov_inputs(a_cl, w, gamma)?;
    let p = if a_cl.nrows() <= LYAPUNOV_DIRECT_MAX_N {
        lyapunov_kronecker(a_cl, w, gamma)?
    } else {
        lyapunov_doubling(a_cl, w, gamma, tol)?
    };
    finish_lyapunov(a_cl, w, gamma, tol, p)
}

/// Smith doubling solver, exposed so it can be checked against the direct path.
pub fn solve_lyapunov_doubling(a_cl: &Mat, w: &Mat, gamma: f64, tol: f64) -> Result<ValueMatrix> {
    check_lyapunov_inputs(a_cl, w, gamma)?;
    let p = lyapunov_doubling(a_cl, w, gamma, tol)?;
    finish_lyapunov(a_cl, w, gamma, tol, p)
}

pub fn lyapunov_residual(a_cl: &Mat, w: &Mat, gamma: f64, p: &Mat) -> f64 {
    (p - w - a_cl.transpose() * p * a_cl * gamma).norm()
}

fn check_lyapunov_inputs(a_cl: &Mat, w: &Mat, gamma: f64) -> Result<()> {
    if !a_cl.is_square() || w.shape() != a_cl.shape() {
        return Err(Error::DimensionMismatch(format!(
            "A_cl is {}x{}, W is {}x{}",
            a_cl.nrows(),
            a_cl.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let radius = gamma.sqrt() * spectral_radius(a_cl);
    if !(radius < 1.0) {
        return Err(Error::UnstableClosedLoop { radius });
    }
    Ok(())
}

fn finish_lyapunov(a_cl: &Mat, w: &Mat, gamma: f64, tol: f64, mut p: Mat) -> Result<ValueMatrix> {
    p = linalg::symmetrize(&p);
    let mut residual = lyapunov_residual(a_cl, w, gamma, &p);
    // a few sweeps of the fixed-point map clean up rounding from the solve
    for _ in 0..8 {
        if residual <= tol {
            break;
        }
        p = linalg::symmetrize(&(w + a_cl.transpose() * &p * a_cl * gamma));
        residual = lyapunov_residual(a_cl, w, gamma, &p);
    }
    if residual > tol && residual > tol * p.norm() {
        return Err(Error::NonConvergence { iterations: 0, residual });
    }
    Ok(ValueMatrix(p))
}

fn lyapunov_kronecker(a_cl: &Mat, w: &Mat, gamma: f64) -> Result<Mat> {
    let n = a_cl.nrows();
    let at = a_cl.transpose();
    let lhs = Mat::identity(n * n, n * n) - at.kronecker(&at) * gamma;
    let rhs = DVector::from_column_slice(w.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::UnstableClosedLoop { radius: gamma.sqrt() * spectral_radius(a_cl) })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

fn lyapunov_doubling(a_cl: &Mat, w: &Mat, gamma: f64, tol: f64) -> Result<Mat> {
    // P_{k+1} = P_k + M_k' P_k M_k,  M_{k+1} = M_k^2,  M_0 = sqrt(g) A_cl
    let mut m = a_cl * gamma.sqrt();
    let mut p = w.clone();
    for it in 0..64 {
        let inc = m.transpose() * &p * &m;
        let step = inc.norm();
        p += inc;
        if step <= tol * 1e-3 || step <= f64::EPSILON * p.norm() {
            return Ok(p);
        }
        if !step.is_finite() {
            return Err(Error::NonConvergence { iterations: it + 1, residual: step });
        }
        m = &m * &m;
    }
    Ok(p)
}

/// Value of the linear policy `u = Kx` on the true system.
pub fn evaluate_policy(sys_true: &SystemParams, prob: &LqrProblem, k: &Gain) -> Result<ValueMatrix> {
    prob.check_dims(sys_true)?;
    if k.matrix().shape() != (sys_true.m(), sys_true.n()) {
        return Err(Error::DimensionMismatch(format!(
            "gain is {}x{}, expected {}x{}",
            k.matrix().nrows(),
            k.matrix().ncols(),
            sys_true.m(),
            sys_true.n()
        )));
    }
    let a_cl = sys_true.closed_loop(k);
    let w = &prob.q + k.matrix().transpose() * &prob.r * k.matrix();
    let p = solve_lyapunov(&a_cl, &w, prob.gamma, 1e-9 * w.norm().max(1.0))?;
    Ok(p)
}

/// `lambda_max(P_pi - P_star)`: worst-case value gap over the unit ball of
/// initial states.
pub fn suboptimality(p_pi: &ValueMatrix, p_star: &ValueMatrix) -> Result<f64> {
    if p_pi.dim() != p_star.dim() {
        return Err(Error::DimensionMismatch(format!(
            "value matrices are {0}x{0} and {1}x{1}",
            p_pi.dim(),
            p_star.dim()
        )));
    }
    if p_pi.dim() == 0 {
        return Ok(0.0);
    }
    Ok(linalg::sym_eig_range(&(p_pi.matrix() - p_star.matrix())).1)
}

/// Kalman rank test on `[B, AB, ..., A^{n-1}B]`.
///
/// Columns are normalized before the SVD (rank is unchanged) so that
/// strongly unstable `A` does not swamp the early blocks.
pub fn is_controllable(sys: &SystemParams, rank_tol: f64) -> bool {
    let (n, m) = (sys.n(), sys.m());
    if n == 0 {
        return true;
    }
    if m == 0 {
        return false;
    }
    let mut ctrb = Mat::zeros(n, n * m);
    let mut block = sys.b().clone();
    for k in 0..n {
        for j in 0..m {
            let col = block.column(j);
            let norm = col.norm();
            if norm > 0.0 && norm.is_finite() {
                ctrb.column_mut(k * m + j).copy_from(&(col / norm));
            }
        }
        block = sys.a() * block;
    }
    let sv = linalg::singular_values_desc(&ctrb);
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return false;
    }
    sv.iter().filter(|&&s| s > rank_tol * smax).count() >= n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(a: f64, b: f64) -> SystemParams {
        SystemParams::new(Mat::from_element(1, 1, a), Mat::from_element(1, 1, b)).unwrap()
    }

    fn scalar_prob(gamma: f64) -> LqrProblem {
        LqrProblem::identity_costs(1, 1, gamma, 1.0).unwrap()
    }

    #[test]
    fn dare_zero_dynamics_is_q() {
        for g in [0.0, 0.5, 0.99] {
            let p = solve_dare(&scalar(0.0, 1.0), &scalar_prob(g), 1e-12, 100).unwrap();
            assert_abs_diff_eq!(p.matrix()[(0, 0)], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dare_golden_ratio() {
        let sys = scalar(1.0, 1.0);
        let prob = scalar_prob(1.0);
        let p = solve_dare(&sys, &prob, 1e-12, 10_000).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(p.matrix()[(0, 0)], phi, epsilon = 1e-9);

        let k = gain_from_value(&sys, &prob, &p).unwrap();
        assert_abs_diff_eq!(k.matrix()[(0, 0)], -1.0 / phi, epsilon = 1e-9);
        let a_cl = sys.closed_loop(&k);
        assert_abs_diff_eq!(a_cl[(0, 0)], 1.0 - 1.0 / phi, epsilon = 1e-9);
    }

    #[test]
    fn dare_rejects_unstabilizable() {
        // unstable mode with no control authority
        let err = solve_dare(&scalar(2.0, 0.0), &scalar_prob(0.9), 1e-10, 10_000).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn dare_dimension_mismatch() {
        let prob = LqrProblem::identity_costs(2, 1, 0.9, 1.0).unwrap();
        assert!(matches!(
            solve_dare(&scalar(0.5, 1.0), &prob, 1e-10, 10),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn zero_input_matrix_gives_zero_gain() {
        let sys = SystemParams::new(Mat::identity(2, 2) * 0.5, Mat::zeros(2, 1)).unwrap();
        let prob = LqrProblem::identity_costs(2, 1, 0.9, 1.0).unwrap();
        let p = solve_dare(&sys, &prob, 1e-12, 10_000).unwrap();
        let k = gain_from_value(&sys, &prob, &p).unwrap();
        assert_eq!(k.matrix().amax(), 0.0);
    }

    #[test]
    fn lyapunov_scalar_geometric_series() {
        let p = solve_lyapunov(&Mat::from_element(1, 1, 0.5), &Mat::from_element(1, 1, 1.0), 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)], 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_zero_closed_loop_returns_w() {
        let w = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = solve_lyapunov(&Mat::zeros(2, 2), &w, 0.9, 1e-12).unwrap();
        assert_eq!(p.matrix(), &w);
    }

    #[test]
    fn lyapunov_unstable_is_an_error() {
        let err = solve_lyapunov(&Mat::from_element(1, 1, 1.2), &Mat::from_element(1, 1, 1.0), 0.9, 1e-10).unwrap_err();
        assert!(matches!(err, Error::UnstableClosedLoop { .. }));
    }

    #[test]
    fn evaluate_scalar_policy() {
        let sys = scalar(1.0, 1.0);
        let prob = scalar_prob(0.9);
        let p = evaluate_policy(&sys, &prob, &Gain::new(Mat::from_element(1, 1, -0.5))).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)], 1.25 / (1.0 - 0.9 * 0.25), epsilon = 1e-12);
    }

    #[test]
    fn suboptimality_of_diagonal_gap() {
        let p_star = ValueMatrix::new(Mat::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        assert_eq!(suboptimality(&p_star, &p_star).unwrap(), 0.0);
        let p_pi = ValueMatrix::new(p_star.matrix() + Mat::from_diagonal(&DVector::from_vec(vec![0.3, 0.1]))).unwrap();
        assert_abs_diff_eq!(suboptimality(&p_pi, &p_star).unwrap(), 0.3, epsilon = 1e-12);
    }

    #[test]
    fn controllability_cases() {
        let zero_a = SystemParams::new(Mat::zeros(3, 3), Mat::identity(3, 3)).unwrap();
        assert!(is_controllable(&zero_a, 1e-10));
        let no_b = SystemParams::new(Mat::identity(3, 3), Mat::zeros(3, 2)).unwrap();
        assert!(!is_controllable(&no_b, 1e-10));
        let chain = SystemParams::new(
            Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 1, &[0.0, 1.0]),
        )
        .unwrap();
        assert!(is_controllable(&chain, 1e-10));
        // decoupled second state never sees the input
        let decoupled = SystemParams::new(Mat::identity(2, 2), Mat::from_row_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert!(!is_controllable(&decoupled, 1e-10));
    }

    #[test]
    fn spectral_radius_cases() {
        assert_abs_diff_eq!(spectral_radius(&Mat::identity(4, 4)), 1.0, epsilon = 1e-12);
        let d = Mat::from_diagonal(&DVector::from_vec(vec![0.2, -3.0]));
        assert_abs_diff_eq!(spectral_radius(&d), 3.0, epsilon = 1e-12);
        let rot = Mat::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        assert_abs_diff_eq!(spectral_radius(&rot), 2.0, epsilon = 1e-8 * 2.0);
    }

    #[test]
    fn theta_roundtrip() {
        let sys = SystemParams::new(
            Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            Mat::from_row_slice(2, 1, &[5.0, 6.0]),
        )
        .unwrap();
        let back = SystemParams::from_theta(&sys.theta(), 2).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn problem_validation() {
        assert!(LqrProblem::new(Mat::identity(1, 1) * -1.0, Mat::identity(1, 1), 0.9, 1.0).is_err());
        assert!(LqrProblem::new(Mat::identity(1, 1), Mat::zeros(1, 1), 0.9, 1.0).is_err());
        assert!(LqrProblem::new(Mat::identity(1, 1), Mat::identity(1, 1), 1.5, 1.0).is_err());
        assert!(LqrProblem::new(Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), Mat::identity(1, 1), 0.9, 1.0).is_err());
    }
}
