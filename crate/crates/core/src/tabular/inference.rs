use super::mdp::{LatentCandidateSet, TabularMdp, TransitionBatch, ValueFn};
use crate::error::{Error, Result};

/// Observed rewards further than this from the candidate's reward make the
/// candidate impossible under the likelihood rule.
pub const REWARD_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InferenceRule {
    /// Squared value-aware residual, minimized.
    TaskRelevant,
    /// Mean log-likelihood of observed transitions, maximized.
    Likelihood,
}

impl InferenceRule {
    pub fn name(self) -> &'static str {
        match self {
            InferenceRule::TaskRelevant => "TR",
            InferenceRule::Likelihood => "LIKELIHOOD",
        }
    }
}

impl std::fmt::Display for InferenceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Mean `log T_z(s'|s, a)` over the batch, or `-inf` if any transition is
/// impossible under the candidate (zero probability or a reward mismatch).
pub fn likelihood_score(candidate: &TabularMdp, batch: &TransitionBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for tr in batch.iter() {
        let p = candidate.prob(tr.s, tr.a, tr.s_next);
        if p <= 0.0 || (tr.r - candidate.reward(tr.s, tr.a)).abs() > REWARD_MATCH_TOL {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
    }
    Ok(total / batch.len() as f64)
}

/// `r - R_z(s, a) + gamma v(s') - gamma E_{T_z(.|s,a)}[v]` for one sample.
pub fn value_residual(candidate: &TabularMdp, v: &ValueFn, s: usize, a: usize, r: f64, s_next: usize) -> f64 {
    let g = candidate.gamma();
    r - candidate.reward(s, a) + g * v.0[s_next] - g * candidate.expect(s, a, v)
}

/// Batch mean of the squared value residual.
pub fn empirical_tr_loss(candidate: &TabularMdp, v: &ValueFn, batch: &TransitionBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if v.len() != candidate.n_states() {
        return Err(Error::DimensionMismatch("value function does not fit the candidate".into()));
    }
    let sum: f64 = batch
        .iter()
        .map(|tr| value_residual(candidate, v, tr.s, tr.a, tr.r, tr.s_next).powi(2))
        .sum();
    Ok(sum / batch.len() as f64)
}

/// Index of the selected candidate; ties go to the lowest index.
pub fn infer_latent(
    rule: InferenceRule,
    candidates: &LatentCandidateSet,
    values: &[ValueFn],
    batch: &TransitionBatch,
) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let scores = match rule {
        InferenceRule::TaskRelevant => {
            if values.len() != candidates.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} candidates but {} value functions",
                    candidates.len(),
                    values.len()
                )));
            }
            candidates
                .iter()
                .zip(values)
                .map(|(m, v)| empirical_tr_loss(m, v, batch).map(|l| -l))
                .collect::<Result<Vec<_>>>()?
        }
        InferenceRule::Likelihood => candidates
            .iter()
            .map(|m| likelihood_score(m, batch))
            .collect::<Result<Vec<_>>>()?,
    };
    let mut best = 0;
    for (z, &score) in scores.iter().enumerate().skip(1) {
        if score > scores[best] {
            best = z;
        }
    }
    Ok(best)
}

/// Population moments of the value residual at one `(s, a)` when `s'` is
/// drawn from the true model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualMoments {
    /// `R - R_z + gamma (T - T_z) v`, the quantity the bound cares about.
    pub mean: f64,
    /// `gamma^2 Var_T[v(s')]`, the transition noise that inflates the squared loss.
    pub noise: f64,
}

impl ResidualMoments {
    /// Expected squared residual.
    pub fn expected_square(&self) -> f64 {
        self.mean * self.mean + self.noise
    }
}

pub fn residual_moments(true_mdp: &TabularMdp, candidate: &TabularMdp, v: &ValueFn, s: usize, a: usize) -> ResidualMoments {
    let g = true_mdp.gamma();
    let row = true_mdp.row(s, a);
    let mean_v = true_mdp.expect(s, a, v);
    let var_v: f64 = row.iter().zip(&v.0).map(|(p, x)| p * (x - mean_v).powi(2)).sum();
    ResidualMoments {
        mean: true_mdp.reward(s, a) - candidate.reward(s, a) + g * (mean_v - candidate.expect(s, a, v)),
        noise: g * g * var_v,
    }
}
