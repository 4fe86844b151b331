//! Batch-size comparison of the two inference rules on a small family where
//! candidate models disagree mostly about transitions that do not change
//! any value.

use super::bound::{check_candidate, BoundCheck, BOUND_SLACK};
use super::inference::{infer_latent, InferenceRule};
use super::mdp::{LatentCandidateSet, TabularMdp, TransitionBatch, ValueFn};
use super::solve::value_iteration;
use crate::error::{Error, Result};
use crate::rng;

const SOLVER_TOL: f64 = 1e-12;

/// Truth plus candidates, each candidate paired with its own optimal value.
#[derive(Debug, Clone)]
pub struct CraftedFamily {
    pub truth: TabularMdp,
    pub candidates: LatentCandidateSet,
    pub values: Vec<ValueFn>,
}

// states
const START: usize = 0;
const HIGH: usize = 1;
const DEAD_A: usize = 2;
const DEAD_B: usize = 3;
const SAFE: usize = 4;
const N_STATES: usize = 5;
const SAFE_REWARD: f64 = 0.4;

/// Five states, two actions. From the start state, action 0 leads to a safe
/// absorbing state paying 0.4 and action 1 is a gamble landing in an
/// absorbing state paying 1 or in one of two zero-reward absorbing states.
/// The truth gambles with odds `(0.5, 0.25, 0.25)`. Candidates:
///
/// 0. odds `(0.3, 0.35, 0.35)`: too pessimistic, its planner takes the safe exit;
/// 1. odds `(0.5, 0.15, 0.35)`;
/// 2. odds `(0.5, 0.05, 0.45)`.
///
/// Candidates 1 and 2 differ from the truth only in how mass is split
/// between the two zero-value states, so they are value-equivalent to it,
/// yet candidate 0 is closer to the truth in likelihood than candidate 2 and
/// only somewhat further than candidate 1. The truth itself is not a
/// candidate.
pub fn crafted_family(gamma: f64) -> Result<CraftedFamily> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidConfig(format!("gamma = {gamma} outside (0, 1)")));
    }
    let build = |gamble: [f64; 3]| -> Result<TabularMdp> {
        let n_actions = 2;
        let mut t = vec![0.0; N_STATES * n_actions * N_STATES];
        let mut r = vec![0.0; N_STATES * n_actions];
        let idx = |s: usize, a: usize, s2: usize| (s * n_actions + a) * N_STATES + s2;
        t[idx(START, 0, SAFE)] = 1.0;
        t[idx(START, 1, HIGH)] = gamble[0];
        t[idx(START, 1, DEAD_A)] = gamble[1];
        t[idx(START, 1, DEAD_B)] = gamble[2];
        for s in [HIGH, DEAD_A, DEAD_B, SAFE] {
            for a in 0..n_actions {
                t[idx(s, a, s)] = 1.0;
            }
        }
        for a in 0..n_actions {
            r[HIGH * n_actions + a] = 1.0;
            r[SAFE * n_actions + a] = SAFE_REWARD;
        }
        TabularMdp::new(N_STATES, n_actions, t, r, gamma)
    };
    let truth = build([0.5, 0.25, 0.25])?;
    let models = vec![build([0.3, 0.35, 0.35])?, build([0.5, 0.15, 0.35])?, build([0.5, 0.05, 0.45])?];
    let values = models.iter().map(|m| value_iteration(m, SOLVER_TOL)).collect();
    Ok(CraftedFamily { truth, candidates: LatentCandidateSet::new(models)?, values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationConfig {
    pub batch_sizes: Vec<usize>,
    pub resamples: usize,
    /// Fraction of resamples that must pick a near-best candidate.
    pub success_fraction: f64,
    pub seed: u64,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self { batch_sizes: geometric_sizes(10, 10_000, 20), resamples: 50, success_fraction: 0.9, seed: 0 }
    }
}

/// `count` integers spaced geometrically from `lo` to `hi`, deduplicated.
pub fn geometric_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    assert!(lo >= 1 && hi >= lo && count >= 2);
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (count - 1) as f64);
    let mut sizes: Vec<usize> = (0..count).map(|k| (lo as f64 * ratio.powi(k as i32)).round() as usize).collect();
    sizes.dedup();
    sizes
}

/// Exact properties of one candidate when its greedy policy runs on the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateQuality {
    pub suboptimality: f64,
    pub inference_error: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    pub batch_size: usize,
    /// How often each candidate was picked.
    pub picks: Vec<usize>,
    /// Resamples whose pick is within `BOUND_SLACK` of the best suboptimality.
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSweep {
    pub rule: InferenceRule,
    pub outcomes: Vec<BatchOutcome>,
    /// Smallest swept batch size from which every larger size succeeds.
    pub required_batch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    pub quality: Vec<CandidateQuality>,
    pub sweeps: Vec<RuleSweep>,
    /// Every pick of the task-relevant rule respected the bound.
    pub tr_picks_within_bound: bool,
}

impl SeparationReport {
    pub fn sweep(&self, rule: InferenceRule) -> &RuleSweep {
        self.sweeps.iter().find(|s| s.rule == rule).expect("both rules are swept")
    }

    /// The task-relevant rule succeeds at a strictly smaller batch size than
    /// the likelihood rule (which may never succeed).
    pub fn separated(&self) -> bool {
        match (
            self.sweep(InferenceRule::TaskRelevant).required_batch,
            self.sweep(InferenceRule::Likelihood).required_batch,
        ) {
            (Some(tr), Some(ll)) => tr < ll,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

pub fn candidate_quality(family: &CraftedFamily) -> Result<Vec<CandidateQuality>> {
    let v_star = value_iteration(&family.truth, SOLVER_TOL);
    let cfg = BoundCheck::new(0.0, SOLVER_TOL);
    family
        .candidates
        .iter()
        .zip(&family.values)
        .enumerate()
        .map(|(z, (model, v))| {
            let rep = check_candidate(&family.truth, &v_star, model, z, v, &cfg)?;
            Ok(CandidateQuality {
                suboptimality: rep.total.lhs,
                inference_error: rep.inference_error,
                bound: rep.total.rhs,
            })
        })
        .collect()
}

/// Draws `resamples` batches per size (shared by both rules) and records
/// which candidate each rule selects.
pub fn run_separation(family: &CraftedFamily, cfg: &SeparationConfig) -> Result<SeparationReport> {
    if cfg.batch_sizes.is_empty() || cfg.batch_sizes.contains(&0) || cfg.resamples == 0 {
        return Err(Error::InvalidConfig("batch sizes and resamples must be positive".into()));
    }
    let quality = candidate_quality(family)?;
    let best = quality.iter().map(|q| q.suboptimality).fold(f64::INFINITY, f64::min);
    let good: Vec<bool> = quality.iter().map(|q| q.suboptimality <= best + BOUND_SLACK).collect();
    let rules = [InferenceRule::TaskRelevant, InferenceRule::Likelihood];
    let needed = (cfg.success_fraction * cfg.resamples as f64).ceil() as usize;

    let mut outcomes: Vec<Vec<BatchOutcome>> = vec![Vec::new(); rules.len()];
    let mut tr_within = true;
    for (k, &size) in cfg.batch_sizes.iter().enumerate() {
        let mut rng = rng::stream(cfg.seed, k as u64);
        let mut picks = vec![vec![0usize; family.candidates.len()]; rules.len()];
        for _ in 0..cfg.resamples {
            let batch = TransitionBatch::sample_uniform(&family.truth, size, &mut rng);
            for (j, &rule) in rules.iter().enumerate() {
                let z = infer_latent(rule, &family.candidates, &family.values, &batch)?;
                picks[j][z] += 1;
                if rule == InferenceRule::TaskRelevant {
                    tr_within &= quality[z].suboptimality <= quality[z].bound + BOUND_SLACK;
                }
            }
        }
        for (j, p) in picks.into_iter().enumerate() {
            let successes = p.iter().zip(&good).filter(|(_, &g)| g).map(|(c, _)| c).sum();
            outcomes[j].push(BatchOutcome { batch_size: size, picks: p, successes });
        }
    }

    let sweeps = rules
        .iter()
        .zip(outcomes)
        .map(|(&rule, outcomes)| {
            let mut required = None;
            for o in outcomes.iter().rev() {
                if o.successes < needed {
                    break;
                }
                required = Some(o.batch_size);
            }
            RuleSweep { rule, outcomes, required_batch: required }
        })
        .collect();
    Ok(SeparationReport { quality, sweeps, tr_picks_within_bound: tr_within })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::bound::task_inference_error;
    use crate::tabular::mdp::Policy;
    use crate::tabular::solve::greedy_policy;
    use approx::assert_abs_diff_eq;

    #[test]
    fn family_values_by_hand() {
        let fam = crafted_family(0.9).unwrap();
        let v = value_iteration(&fam.truth, 1e-12);
        // V(HIGH) = 10, V(SAFE) = 4, V(START) = 0.9 * 0.5 * 10
        assert_abs_diff_eq!(v.0[HIGH], 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v.0[SAFE], 4.0, epsilon = 1e-10);
        assert_abs_diff_eq!(v.0[START], 4.5, epsilon = 1e-10);
        assert_eq!(greedy_policy(fam.candidates.get(0), &fam.values[0]), Policy::Deterministic(vec![0; 5]));
        assert_eq!(greedy_policy(fam.candidates.get(1), &fam.values[1]).prob(START, 1), 1.0);
    }

    #[test]
    fn value_equivalent_candidates_have_zero_error() {
        let fam = crafted_family(0.9).unwrap();
        let q = candidate_quality(&fam).unwrap();
        assert_abs_diff_eq!(q[0].suboptimality, 0.9, epsilon = 1e-10);
        assert_abs_diff_eq!(q[0].inference_error, 1.8, epsilon = 1e-10);
        for z in [1, 2] {
            assert!(q[z].inference_error < 1e-10);
            assert!(q[z].suboptimality < 1e-10);
            assert!(task_inference_error(&fam.truth, fam.candidates.get(z), &fam.values[z]).unwrap() < 1e-10);
        }
    }

    #[test]
    fn geometric_grid_endpoints() {
        let g = geometric_sizes(10, 10_000, 20);
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (10, 10_000));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let fam = crafted_family(0.9).unwrap();
        let cfg = SeparationConfig { batch_sizes: vec![20, 200], resamples: 5, ..SeparationConfig::default() };
        assert_eq!(run_separation(&fam, &cfg).unwrap(), run_separation(&fam, &cfg).unwrap());
    }
}
