use rand::Rng as _;

use super::mdp::{LatentCandidateSet, TabularMdp, ValueFn};
use super::solve::{greedy_policy, policy_evaluation, value_iteration};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default slack added to every checked inequality.
pub const BOUND_SLACK: f64 = 1e-9;

/// `max_{s,a} |R - R_z + gamma (T - T_z) v|`.
pub fn task_inference_error(true_mdp: &TabularMdp, candidate: &TabularMdp, v: &ValueFn) -> Result<f64> {
    if !true_mdp.same_shape(candidate) || v.len() != true_mdp.n_states() {
        return Err(Error::DimensionMismatch("MDPs and value function disagree in shape".into()));
    }
    let g = true_mdp.gamma();
    let mut worst: f64 = 0.0;
    for s in 0..true_mdp.n_states() {
        for a in 0..true_mdp.n_actions() {
            let dv: f64 = true_mdp
                .row(s, a)
                .iter()
                .zip(candidate.row(s, a))
                .zip(&v.0)
                .map(|((p, q), x)| (p - q) * x)
                .sum();
            let term = true_mdp.reward(s, a) - candidate.reward(s, a) + g * dv;
            worst = worst.max(term.abs());
        }
    }
    Ok(worst)
}

/// `V*` of `model` with every entry moved by an independent `U[-eps, eps]`.
pub fn perturbed_optimal_value(model: &TabularMdp, eps: f64, solver_tol: f64, rng: &mut Rng) -> ValueFn {
    let mut v = value_iteration(model, solver_tol);
    if eps > 0.0 {
        for x in &mut v.0 {
            *x += rng.random_range(-eps..=eps);
        }
    }
    v
}

/// Right-hand sides of the suboptimality bound and of its three intermediate
/// steps. `planning_scale` multiplies every `eps` term; it is 1 except when a
/// test wants to confirm that a weakened bound is caught.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    pub total: f64,
    pub planning: f64,
    pub optimal_mismatch: f64,
    pub policy_mismatch: f64,
}

impl BoundTerms {
    pub fn new(gamma: f64, inference_error: f64, eps: f64, planning_scale: f64) -> Self {
        let h = 1.0 - gamma;
        let e = planning_scale * eps;
        Self {
            total: 2.0 * inference_error / h + (4.0 + 2.0 * gamma * h) * e / (h * h),
            planning: 2.0 * gamma * e / h,
            optimal_mismatch: inference_error / h + 2.0 * e / h,
            policy_mismatch: inference_error / h + 2.0 * (1.0 + gamma) * e / (h * h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedInequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckedInequality {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub index: usize,
    pub inference_error: f64,
    /// `||V*_M - V^{pi_z}_M||`, the suboptimality bound itself.
    pub total: CheckedInequality,
    /// `||V*_{M_z} - V^{pi_z}_{M_z}||`.
    pub planning: CheckedInequality,
    /// `||V*_M - V*_{M_z}||`.
    pub optimal_mismatch: CheckedInequality,
    /// `||V^{pi_z}_M - V^{pi_z}_{M_z}||`.
    pub policy_mismatch: CheckedInequality,
}

impl CandidateReport {
    pub fn inequalities(&self) -> [(&'static str, CheckedInequality); 4] {
        [
            ("total", self.total),
            ("planning", self.planning),
            ("optimal_mismatch", self.optimal_mismatch),
            ("policy_mismatch", self.policy_mismatch),
        ]
    }

    pub fn violations(&self, tol: f64) -> usize {
        self.inequalities().iter().filter(|(_, c)| !c.holds(tol)).count()
    }
}

/// Settings shared by every bound check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    /// Sup-norm accuracy of the value function handed to the planner.
    pub eps: f64,
    pub solver_tol: f64,
    pub planning_scale: f64,
}

impl BoundCheck {
    pub fn new(eps: f64, solver_tol: f64) -> Self {
        Self { eps, solver_tol, planning_scale: 1.0 }
    }
}

/// Checks the bound for one candidate whose planner was handed `v_z`,
/// assumed to satisfy `||V*_{M_z} - v_z|| <= eps`.
pub fn check_candidate(
    true_mdp: &TabularMdp,
    v_star: &ValueFn,
    candidate: &TabularMdp,
    index: usize,
    v_z: &ValueFn,
    cfg: &BoundCheck,
) -> Result<CandidateReport> {
    let solver_tol = cfg.solver_tol;
    if (true_mdp.gamma() - candidate.gamma()).abs() > 0.0 {
        return Err(Error::DimensionMismatch("candidate discount differs from the true MDP".into()));
    }
    let tie = task_inference_error(true_mdp, candidate, v_z)?;
    let rhs = BoundTerms::new(true_mdp.gamma(), tie, cfg.eps, cfg.planning_scale);
    let pi_z = greedy_policy(candidate, v_z);
    let v_pi_true = policy_evaluation(true_mdp, &pi_z, solver_tol);
    let v_pi_model = policy_evaluation(candidate, &pi_z, solver_tol);
    let v_star_model = value_iteration(candidate, solver_tol);
    Ok(CandidateReport {
        index,
        inference_error: tie,
        total: CheckedInequality { lhs: v_star.sup_dist(&v_pi_true), rhs: rhs.total },
        planning: CheckedInequality { lhs: v_star_model.sup_dist(&v_pi_model), rhs: rhs.planning },
        optimal_mismatch: CheckedInequality { lhs: v_star.sup_dist(&v_star_model), rhs: rhs.optimal_mismatch },
        policy_mismatch: CheckedInequality { lhs: v_pi_true.sup_dist(&v_pi_model), rhs: rhs.policy_mismatch },
    })
}

/// Runs [`check_candidate`] over a candidate set, drawing each `V_z` as the
/// exact optimal value of the candidate perturbed within `+-eps`.
pub fn verify_theorem_bound(
    true_mdp: &TabularMdp,
    candidates: &LatentCandidateSet,
    cfg: &BoundCheck,
    rng: &mut Rng,
) -> Result<Vec<CandidateReport>> {
    let v_star = value_iteration(true_mdp, cfg.solver_tol);
    candidates
        .iter()
        .enumerate()
        .map(|(z, model)| {
            let v_z = perturbed_optimal_value(model, cfg.eps, cfg.solver_tol, rng);
            check_candidate(true_mdp, &v_star, model, z, &v_z, cfg)
        })
        .collect()
}

/// Two-state instance on which the planning step of the bound is nearly
/// tight: the goal reward is just under `2 eps`, and a value estimate that
/// overrates the start state and underrates the goal by `eps` makes the
/// greedy planner stay put.
pub fn planning_witness(gamma: f64, eps: f64) -> Result<(TabularMdp, ValueFn)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("witness needs eps > 0".into()));
    }
    let c = 2.0 * eps * (1.0 - 1e-3);
    // state 0: action 0 loops, action 1 moves to the goal; state 1 absorbs
    let t = vec![1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
    let r = vec![0.0, 0.0, c, c];
    let mdp = TabularMdp::new(2, 2, t, r, gamma)?;
    let goal = c / (1.0 - gamma);
    let v = ValueFn(vec![gamma * goal + eps, goal - eps]);
    Ok((mdp, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::tabular::mdp::Policy;
    use approx::assert_abs_diff_eq;

    const TOL: f64 = 1e-12;

    #[test]
    fn self_candidate_has_zero_bound() {
        let mut r = rng::stream(0, 0);
        let mdp = TabularMdp::random(4, 3, 0.9, 0.2, &mut r).unwrap();
        let set = LatentCandidateSet::new(vec![mdp.clone()]).unwrap();
        let rep = verify_theorem_bound(&mdp, &set, &BoundCheck::new(0.0, TOL), &mut r).unwrap();
        assert_eq!(rep[0].inference_error, 0.0);
        assert!(rep[0].total.lhs <= 1e-10);
        assert_eq!(rep[0].total.rhs, 0.0);
        assert_eq!(rep[0].violations(BOUND_SLACK), 0);
    }

    #[test]
    fn reward_gap_is_inference_error() {
        let t = vec![1.0, 0.0, 0.0, 1.0];
        let m = TabularMdp::new(2, 1, t.clone(), vec![0.3, 0.0], 0.5).unwrap();
        let z = TabularMdp::new(2, 1, t, vec![0.2, 0.0], 0.5).unwrap();
        let e = task_inference_error(&m, &z, &ValueFn(vec![4.0, -1.0])).unwrap();
        assert_abs_diff_eq!(e, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn constant_value_hides_transition_gap() {
        let mut r = rng::stream(2, 0);
        let a = TabularMdp::random(3, 2, 0.9, 0.0, &mut r).unwrap();
        let b = TabularMdp::new(3, 2, TabularMdp::random(3, 2, 0.9, 0.0, &mut r).unwrap().transitions().to_vec(), a.rewards().to_vec(), 0.9)
            .unwrap();
        assert!(task_inference_error(&a, &b, &ValueFn(vec![7.0; 3])).unwrap() < 1e-14);
    }

    #[test]
    fn constant_shift_leaves_policy_unchanged() {
        let mut r = rng::stream(9, 0);
        for _ in 0..100 {
            let mdp = TabularMdp::random(4, 3, 0.9, 0.3, &mut r).unwrap();
            let v = ValueFn((0..4).map(|_| r.random_range(-5.0..5.0)).collect());
            let c = r.random_range(-10.0..10.0);
            assert_eq!(greedy_policy(&mdp, &v), greedy_policy(&mdp, &v.shifted(c)));
        }
    }

    #[test]
    fn shifted_truth_meets_bound_with_zero_lhs() {
        let mut r = rng::stream(3, 0);
        let mdp = TabularMdp::random(5, 2, 0.5, 0.2, &mut r).unwrap();
        let eps = 0.05;
        let v_star = value_iteration(&mdp, TOL);
        let rep = check_candidate(&mdp, &v_star, &mdp, 0, &v_star.shifted(eps), &BoundCheck::new(eps, TOL)).unwrap();
        assert!(rep.total.lhs <= 1e-10);
        assert_abs_diff_eq!(rep.total.rhs, (4.0 + 2.0 * 0.5 * 0.5) * eps / 0.25 + 2.0 * rep.inference_error / 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_inference_error_leaves_planning_term() {
        let mut r = rng::stream(21, 0);
        for _ in 0..50 {
            let mdp = TabularMdp::random(4, 3, 0.9, 0.3, &mut r).unwrap();
            let v_star = value_iteration(&mdp, TOL);
            let rep = check_candidate(&mdp, &v_star, &mdp, 0, &v_star, &BoundCheck::new(0.05, TOL)).unwrap();
            assert!(rep.total.lhs <= BoundTerms::new(0.9, 0.0, 0.05, 1.0).total + BOUND_SLACK);
        }
    }

    #[test]
    fn witness_is_caught_only_when_planning_term_is_halved() {
        for gamma in [0.5, 0.9] {
            let eps = 0.05;
            let (mdp, v) = planning_witness(gamma, eps).unwrap();
            let v_star = value_iteration(&mdp, TOL);
            assert!(v.sup_dist(&v_star) <= eps + 1e-12);
            assert_eq!(greedy_policy(&mdp, &v), Policy::Deterministic(vec![0, 0]));
            let honest = check_candidate(&mdp, &v_star, &mdp, 0, &v, &BoundCheck::new(eps, TOL)).unwrap();
            assert_eq!(honest.violations(BOUND_SLACK), 0);
            let weak = check_candidate(&mdp, &v_star, &mdp, 0, &v, &BoundCheck { planning_scale: 0.5, ..BoundCheck::new(eps, TOL) }).unwrap();
            assert!(!weak.planning.holds(BOUND_SLACK));
        }
    }

    #[test]
    fn perturbation_stays_within_eps() {
        let mut r = rng::stream(17, 0);
        let mdp = TabularMdp::random(5, 3, 0.9, 0.3, &mut r).unwrap();
        let exact = value_iteration(&mdp, TOL);
        let v = perturbed_optimal_value(&mdp, 0.05, TOL, &mut r);
        assert!(v.sup_dist(&exact) <= 0.05);
        assert!(v.sup_dist(&exact) > 0.0);
    }
}
