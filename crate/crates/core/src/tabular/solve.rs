use nalgebra::{DMatrix, DVector};

use super::mdp::{Policy, TabularMdp, ValueFn};

/// Value iteration from `V = 0`, stopped once successive iterates are within
/// `tol (1 - gamma) / (2 gamma)` so that the result is `tol`-close to `V*`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> ValueFn {
    assert!(tol > 0.0, "value_iteration needs a positive tolerance");
    let g = mdp.gamma();
    let mut v = ValueFn::zeros(mdp.n_states());
    if g == 0.0 {
        return mdp.bellman_optimal(&v);
    }
    let stop = tol * (1.0 - g) / (2.0 * g);
    loop {
        let next = mdp.bellman_optimal(&v);
        let delta = next.sup_dist(&v);
        v = next;
        if delta <= stop {
            return v;
        }
    }
}

/// Greedy policy with respect to the one-step lookahead under `model`;
/// ties go to the lowest action index.
pub fn greedy_policy(model: &TabularMdp, v: &ValueFn) -> Policy {
    let actions = (0..model.n_states())
        .map(|s| {
            let mut best = 0;
            let mut best_q = model.lookahead(s, 0, v);
            for a in 1..model.n_actions() {
                let q = model.lookahead(s, a, v);
                if q > best_q {
                    best = a;
                    best_q = q;
                }
            }
            best
        })
        .collect();
    Policy::Deterministic(actions)
}

/// `V^pi` from the linear system `(I - gamma T_pi) v = r_pi`, polished with
/// fixed-point sweeps until the Bellman residual is at most `tol (1 - gamma)`.
pub fn policy_evaluation(mdp: &TabularMdp, pi: &Policy, tol: f64) -> ValueFn {
    let (ns, na, g) = (mdp.n_states(), mdp.n_actions(), mdp.gamma());
    let mut t_pi = DMatrix::zeros(ns, ns);
    let mut r_pi = DVector::zeros(ns);
    for s in 0..ns {
        for a in 0..na {
            let w = pi.prob(s, a);
            if w == 0.0 {
                continue;
            }
            r_pi[s] += w * mdp.reward(s, a);
            for (s2, p) in mdp.row(s, a).iter().enumerate() {
                t_pi[(s, s2)] += w * p;
            }
        }
    }
    let lhs = DMatrix::identity(ns, ns) - t_pi * g;
    let mut v = match lhs.lu().solve(&r_pi) {
        Some(sol) => ValueFn(sol.iter().copied().collect()),
        None => ValueFn::zeros(ns),
    };
    let stop = tol * (1.0 - g);
    for _ in 0..100_000 {
        let next = mdp.bellman_policy(pi, &v);
        let resid = next.sup_dist(&v);
        if resid <= stop {
            break;
        }
        v = next;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;

    fn chain() -> TabularMdp {
        // s0 -> s1 -> s1, R(s0) = 0, R(s1) = 1
        TabularMdp::new(2, 1, vec![0.0, 1.0, 0.0, 1.0], vec![0.0, 1.0], 0.5).unwrap()
    }

    #[test]
    fn single_state_geometric_series() {
        let mdp = TabularMdp::new(1, 1, vec![1.0], vec![1.0], 0.5).unwrap();
        assert_abs_diff_eq!(value_iteration(&mdp, 1e-12).0[0], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_reward_zero_value() {
        let mdp = TabularMdp::random(4, 2, 0.9, 0.3, &mut rng::stream(1, 0)).unwrap();
        let zero = TabularMdp::new(4, 2, mdp.transitions().to_vec(), vec![0.0; 8], 0.9).unwrap();
        assert!(value_iteration(&zero, 1e-10).0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn chain_backward_induction() {
        let v = value_iteration(&chain(), 1e-12);
        assert_abs_diff_eq!(v.0[1], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.0[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn greedy_prefers_delayed_reward() {
        // s0: action 0 pays 1 and stays in s0 forever paying... 1 only here;
        // action 1 pays 0 and moves to s1 which pays 3 forever.
        // s0 stays under action 0 (reward 1 each step) => value 1 / (1 - 0.9) = 10
        // s0 -> s1 under action 1 => 0 + 0.9 * 30 = 27
        let t = vec![
            1.0, 0.0, // s0, a0
            0.0, 1.0, // s0, a1
            0.0, 1.0, // s1, a0
            0.0, 1.0, // s1, a1
        ];
        let r = vec![1.0, 0.0, 3.0, 3.0];
        let mdp = TabularMdp::new(2, 2, t, r, 0.9).unwrap();
        let v = value_iteration(&mdp, 1e-12);
        assert_abs_diff_eq!(v.0[0], 27.0, epsilon = 1e-10);
        assert_eq!(greedy_policy(&mdp, &v), Policy::Deterministic(vec![1, 0]));
    }

    #[test]
    fn greedy_of_optimal_value_is_optimal() {
        let mut r = rng::stream(4, 0);
        for _ in 0..50 {
            let mdp = TabularMdp::random(5, 3, 0.9, 0.4, &mut r).unwrap();
            let v = value_iteration(&mdp, 1e-11);
            let pi = greedy_policy(&mdp, &v);
            assert!(policy_evaluation(&mdp, &pi, 1e-11).sup_dist(&v) <= 2e-11);
        }
    }

    #[test]
    fn reward_independent_of_behavior() {
        let t = vec![0.5, 0.5, 0.2, 0.8, 0.8, 0.2, 0.5, 0.5];
        let mdp = TabularMdp::new(2, 2, t, vec![1.0; 4], 0.8).unwrap();
        let v = policy_evaluation(&mdp, &Policy::uniform(2, 2), 1e-12);
        for x in v.0 {
            assert_abs_diff_eq!(x, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn policy_evaluation_matches_linear_oracle() {
        let mut r = rng::stream(6, 0);
        for _ in 0..20 {
            let mdp = TabularMdp::random(3, 2, 0.9, 0.2, &mut r).unwrap();
            let acts: Vec<usize> = (0..3).map(|s| (s * 7 + 1) % 2).collect();
            let pi = Policy::Deterministic(acts.clone());
            let v = policy_evaluation(&mdp, &pi, 1e-13);
            // independent oracle: Gaussian elimination on 3x3
            let mut m = [[0.0f64; 4]; 3];
            for s in 0..3 {
                for s2 in 0..3 {
                    m[s][s2] = (s == s2) as u8 as f64 - 0.9 * mdp.prob(s, acts[s], s2);
                }
                m[s][3] = mdp.reward(s, acts[s]);
            }
            for c in 0..3 {
                let piv = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
                m.swap(c, piv);
                for i in 0..3 {
                    if i != c {
                        let f = m[i][c] / m[c][c];
                        for k in c..4 {
                            m[i][k] -= f * m[c][k];
                        }
                    }
                }
            }
            for s in 0..3 {
                assert_abs_diff_eq!(v.0[s], m[s][3] / m[s][s], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn contraction_halves_residual() {
        let mut r = rng::stream(12, 0);
        let g: f64 = 0.9;
        let sweeps = (2f64.ln() / (1.0 / g).ln()).ceil() as usize;
        for _ in 0..20 {
            let mdp = TabularMdp::random(5, 3, g, 0.3, &mut r).unwrap();
            let mut v = ValueFn::zeros(5);
            let resid = |v: &ValueFn| mdp.bellman_optimal(v).sup_dist(v);
            for _ in 0..10 {
                let before = resid(&v);
                for _ in 0..sweeps {
                    v = mdp.bellman_optimal(&v);
                }
                assert!(resid(&v) <= 0.5 * before + 1e-15);
            }
        }
    }
}
