//! Value-aware model learning.
//!
//! * [`lqr`]: discounted Riccati/Lyapunov solvers and the policy-gap metric.
//! * [`ident`]: least-squares and task-relevant SGD identification of `(A, B)`.
//! * [`orbit`]: the set of models that the task-relevant loss cannot tell apart.
//! * [`tabular`]: exact finite-MDP checks of the suboptimality bound and the
//!   likelihood versus task-relevant latent inference rules.
//! * [`experiment`], [`format`]: orchestration and text formats used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod format;
pub mod ident;
pub mod linalg;
pub mod lqr;
pub mod orbit;
pub mod rng;
pub mod tabular;

pub use error::{Error, Result};
pub use ident::{Method, RunHistory, SgdConfig, Suboptimality, Trajectory};
pub use lqr::{Gain, LqrProblem, SystemParams, ValueMatrix};
