//! Finite MDPs solved exactly: value iteration, policy evaluation, the
//! suboptimality bound for planning in an inferred model, and the two
//! latent-inference rules.

pub mod bound;
pub mod inference;
pub mod mdp;
pub mod separation;
pub mod solve;

pub use bound::{task_inference_error, verify_theorem_bound, BoundCheck, BoundTerms, CandidateReport};
pub use inference::{empirical_tr_loss, infer_latent, likelihood_score, InferenceRule};
pub use mdp::{LatentCandidateSet, Policy, TabularMdp, Transition, TransitionBatch, ValueFn};
pub use solve::{greedy_policy, policy_evaluation, value_iteration};
