//! Solver and gradient checks against independent reference computations.

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use taskrel_core::ident::{self, Trajectory};
use taskrel_core::lqr::{self, LqrProblem, SystemParams, ValueMatrix};
use taskrel_core::rng;

type Mat = DMatrix<f64>;

fn gaussian_mat(r: usize, c: usize, rng: &mut rng::Rng) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn spd(n: usize, rng: &mut rng::Rng) -> ValueMatrix {
    let g = gaussian_mat(n, n, rng);
    ValueMatrix::new(&g * g.transpose() + Mat::identity(n, n)).unwrap()
}

/// `(I - gamma A'⊗A') vec P = vec W`, assembled entry by entry.
fn kronecker_lyapunov(a: &Mat, w: &Mat, gamma: f64) -> Mat {
    let n = a.nrows();
    let mut big = Mat::identity(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    big[(i + n * j, k + n * l)] -= gamma * a[(k, i)] * a[(l, j)];
                }
            }
        }
    }
    let rhs = DVector::from_column_slice(w.as_slice());
    let sol = big.lu().solve(&rhs).expect("nonsingular for a stable pair");
    Mat::from_column_slice(n, n, sol.as_slice())
}

#[test]
fn scalar_riccati_golden_ratio() {
    let sys = SystemParams::new(Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0)).unwrap();
    let prob = LqrProblem::identity_costs(1, 1, 1.0, 1.0).unwrap();
    let p = lqr::solve_dare(&sys, &prob, 1e-12, lqr::DARE_MAX_ITER).unwrap();
    assert_abs_diff_eq!(p.matrix()[(0, 0)], (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-9);
    let reference = lqr::solve_dare_fixed_point(&sys, &prob, 1e-12, lqr::DARE_MAX_ITER).unwrap();
    assert_abs_diff_eq!(p.matrix()[(0, 0)], reference.matrix()[(0, 0)], epsilon = 1e-9);
}

#[test]
fn lyapunov_matches_kronecker_solve() {
    let mut r = rng::stream(11, 0);
    for case in 0..20 {
        let n = 1 + case % 7;
        let gamma: f64 = [0.5, 0.9, 1.0][case % 3];
        let raw = gaussian_mat(n, n, &mut r);
        let rho = lqr::spectral_radius(&raw).max(1e-3);
        let target = r.random_range(0.1..0.95) / gamma.sqrt();
        let a = raw * (target / rho);
        let w = spd(n, &mut r).into_inner();
        let reference = kronecker_lyapunov(&a, &w, gamma);
        for p in [
            lqr::solve_lyapunov(&a, &w, gamma, 1e-12).unwrap(),
            lqr::solve_lyapunov_doubling(&a, &w, gamma, 1e-12).unwrap(),
        ] {
            let scale = reference.amax().max(1.0);
            assert!((p.matrix() - &reference).amax() <= 1e-9 * scale, "case {case}");
        }
    }
}

#[test]
fn doubling_riccati_agrees_with_plain_recursion() {
    let mut r = rng::stream(12, 0);
    for case in 0..20 {
        let (n, m) = (5 + case % 6, 1 + case % 3);
        let sys = ident::random_system(n, m, &mut r).unwrap();
        let prob = LqrProblem::identity_costs(n, m, 0.9, 1.0).unwrap();
        let fast = lqr::solve_dare(&sys, &prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER).unwrap();
        let slow = lqr::solve_dare_fixed_point(&sys, &prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER).unwrap();
        let scale = slow.matrix().amax().max(1.0);
        assert!((fast.matrix() - slow.matrix()).amax() <= 1e-8 * scale, "case {case}");
        let rhs = lqr::riccati_rhs(&sys, &prob, fast.matrix()).unwrap();
        assert!((rhs - fast.matrix()).norm() <= 1e-9 * scale);
    }
}

#[test]
fn optimal_gain_beats_perturbed_gains() {
    let mut r = rng::stream(13, 0);
    for _ in 0..10 {
        let sys = ident::random_system(6, 2, &mut r).unwrap();
        let prob = LqrProblem::identity_costs(6, 2, 0.9, 1.0).unwrap();
        let p = lqr::solve_dare(&sys, &prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER).unwrap();
        let k = lqr::gain_from_value(&sys, &prob, &p).unwrap();
        let p_k = lqr::evaluate_policy(&sys, &prob, &k).unwrap();
        assert!(lqr::suboptimality(&p_k, &p).unwrap().abs() < 1e-8);
        let k2 = lqr::Gain::new(k.matrix() + gaussian_mat(2, 6, &mut r) * 0.01);
        if let Ok(p2) = lqr::evaluate_policy(&sys, &prob, &k2) {
            assert!(lqr::suboptimality(&p2, &p).unwrap() > 0.0);
        }
    }
}

fn trajectory(n: usize, m: usize, len: usize, rng: &mut rng::Rng) -> Trajectory {
    let states = (0..=len).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
    let inputs = (0..len).map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0))).collect();
    Trajectory::new(states, inputs).unwrap()
}

fn central_difference(f: impl Fn(&Mat) -> f64, theta: &Mat, h: f64) -> Mat {
    Mat::from_fn(theta.nrows(), theta.ncols(), |i, j| {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[(i, j)] += h;
        minus[(i, j)] -= h;
        (f(&plus) - f(&minus)) / (2.0 * h)
    })
}

#[test]
fn gradients_match_central_differences() {
    let mut r = rng::stream(14, 0);
    let h = 1e-6;
    let mut checked = 0;
    while checked < 20 {
        let (n, m) = (1 + r.random_range(0..4), 1 + r.random_range(0..3));
        let tau = trajectory(n, m, 6, &mut r);
        let theta = gaussian_mat(n, n + m, &mut r);
        let p = spd(n, &mut r);
        let lambda = 1e-2;
        let params = |t: &Mat| SystemParams::from_theta(t, n).unwrap();

        // the absolute value is smooth only away from zero residuals
        let (z, next) = tau.regressors();
        let y = &theta * &z;
        let min_resid = (0..z.ncols())
            .map(|k| (next.column(k).dot(&(p.matrix() * next.column(k))) - y.column(k).dot(&(p.matrix() * y.column(k)))).abs())
            .fold(f64::INFINITY, f64::min);
        if min_resid < 1e-2 {
            continue;
        }

        let g_ols = ident::ols_grad(&params(&theta), &tau, lambda).unwrap();
        let fd_ols = central_difference(|t| ident::ols_loss(&params(t), &tau, lambda).unwrap(), &theta, h);
        assert!((g_ols - fd_ols).amax() < 1e-5);

        let g_tr = ident::tr_subgrad(&params(&theta), &tau, &p, lambda).unwrap();
        let fd_tr = central_difference(|t| ident::tr_loss(&params(t), &tau, &p, lambda).unwrap(), &theta, h);
        assert!((g_tr - fd_tr).amax() < 1e-5);
        checked += 1;
    }
}

#[test]
fn losses_match_direct_sums() {
    let mut r = rng::stream(15, 0);
    for _ in 0..20 {
        let (n, m) = (3, 2);
        let tau = trajectory(n, m, 5, &mut r);
        let theta = SystemParams::new(gaussian_mat(n, n, &mut r), gaussian_mat(n, m, &mut r)).unwrap();
        let p = spd(n, &mut r);
        let lambda = 0.3;
        let reg = lambda * theta.theta().norm_squared();
        let (mut ols, mut tr) = (0.0, 0.0);
        for k in 0..5 {
            let pred = theta.a() * &tau.states()[k] + theta.b() * &tau.inputs()[k];
            let next = &tau.states()[k + 1];
            ols += (next - &pred).norm_squared();
            tr += (p.quad(next) - p.quad(&pred)).abs();
        }
        assert_abs_diff_eq!(ident::ols_loss(&theta, &tau, lambda).unwrap(), ols / 5.0 + reg, epsilon = 1e-12);
        assert_abs_diff_eq!(ident::tr_loss(&theta, &tau, &p, lambda).unwrap(), tr / 5.0 + reg, epsilon = 1e-12);
    }
}
