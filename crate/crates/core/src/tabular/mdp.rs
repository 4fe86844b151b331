use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

const ROW_SUM_TOL: f64 = 1e-12;

/// Finite MDP `<T, R, gamma>` with explicit tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// `T[s][a][s']`, flattened row-major.
    t: Vec<f64>,
    /// `R[s][a]`, flattened row-major.
    r: Vec<f64>,
    gamma: f64,
}

impl TabularMdp {
    pub fn new(n_states: usize, n_actions: usize, t: Vec<f64>, r: Vec<f64>, gamma: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidConfig("an MDP needs at least one state and one action".into()));
        }
        if t.len() != n_states * n_actions * n_states || r.len() != n_states * n_actions {
            return Err(Error::DimensionMismatch(format!(
                "expected {} transition and {} reward entries, got {} and {}",
                n_states * n_actions * n_states,
                n_states * n_actions,
                t.len(),
                r.len()
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!("gamma = {gamma} outside [0, 1)")));
        }
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("rewards must be finite".into()));
        }
        for (row_idx, row) in t.chunks(n_states).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidConfig(format!(
                    "transition row (s={}, a={}) has an entry outside [0, 1]",
                    row_idx / n_actions,
                    row_idx % n_actions
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidConfig(format!(
                    "transition row (s={}, a={}) sums to {sum}",
                    row_idx / n_actions,
                    row_idx % n_actions
                )));
            }
        }
        Ok(Self { n_states, n_actions, t, r, gamma })
    }

    /// Random MDP with rewards in `[-1, 1]` and transition rows drawn by
    /// normalizing uniform weights, each entry zeroed with probability
    /// `sparsity` (at least one successor is kept).
    pub fn random(n_states: usize, n_actions: usize, gamma: f64, sparsity: f64, rng: &mut Rng) -> Result<Self> {
        let mut t = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            let keep = rng.random_range(0..n_states);
            let mut row: Vec<f64> = (0..n_states)
                .map(|s2| {
                    if s2 != keep && rng.random_bool(sparsity) {
                        0.0
                    } else {
                        rng.random_range(0.05..1.0)
                    }
                })
                .collect();
            normalize(&mut row);
            t.extend(row);
        }
        let r = (0..n_states * n_actions).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::new(n_states, n_actions, t, r, gamma)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `T(. | s, a)`.
    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.t[start..start + self.n_states]
    }

    pub fn prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.row(s, a)[s2]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.r[s * self.n_actions + a]
    }

    pub fn transitions(&self) -> &[f64] {
        &self.t
    }

    pub fn rewards(&self) -> &[f64] {
        &self.r
    }

    /// `E_{s' ~ T(.|s,a)} v(s')`.
    pub fn expect(&self, s: usize, a: usize, v: &ValueFn) -> f64 {
        self.row(s, a).iter().zip(&v.0).map(|(p, x)| p * x).sum()
    }

    /// One-step lookahead `R(s,a) + gamma E[v(s')]`.
    pub fn lookahead(&self, s: usize, a: usize, v: &ValueFn) -> f64 {
        self.reward(s, a) + self.gamma * self.expect(s, a, v)
    }

    /// Optimal Bellman operator `F v`.
    pub fn bellman_optimal(&self, v: &ValueFn) -> ValueFn {
        ValueFn(
            (0..self.n_states)
                .map(|s| {
                    (0..self.n_actions)
                        .map(|a| self.lookahead(s, a, v))
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect(),
        )
    }

    /// Policy Bellman operator `F^pi v`.
    pub fn bellman_policy(&self, pi: &Policy, v: &ValueFn) -> ValueFn {
        ValueFn(
            (0..self.n_states)
                .map(|s| {
                    (0..self.n_actions)
                        .map(|a| pi.prob(s, a) * self.lookahead(s, a, v))
                        .sum()
                })
                .collect(),
        )
    }

    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions && self.gamma == other.gamma
    }
}

pub(crate) fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|p| *p /= sum);
    // push rounding residue onto the largest entry so the row sums to 1
    let resid = 1.0 - row.iter().sum::<f64>();
    if let Some(max) = row.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *max += resid;
    }
}

/// Per-state values.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFn(pub Vec<f64>);

impl ValueFn {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `||self - other||_inf`.
    pub fn sup_dist(&self, other: &ValueFn) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn shifted(&self, c: f64) -> ValueFn {
        ValueFn(self.0.iter().map(|x| x + c).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// One action per state.
    Deterministic(Vec<usize>),
    /// Action distribution per state.
    Stochastic(Vec<Vec<f64>>),
}

impl Policy {
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        match self {
            Policy::Deterministic(acts) => (acts[s] == a) as u8 as f64,
            Policy::Stochastic(dists) => dists[s][a],
        }
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Policy::Stochastic(vec![vec![1.0 / n_actions as f64; n_actions]; n_states])
    }

    pub fn validate(&self, mdp: &TabularMdp) -> Result<()> {
        match self {
            Policy::Deterministic(acts) => {
                if acts.len() != mdp.n_states() || acts.iter().any(|&a| a >= mdp.n_actions()) {
                    return Err(Error::DimensionMismatch("policy does not fit the MDP".into()));
                }
            }
            Policy::Stochastic(dists) => {
                if dists.len() != mdp.n_states()
                    || dists.iter().any(|d| d.len() != mdp.n_actions() || (d.iter().sum::<f64>() - 1.0).abs() > 1e-9)
                {
                    return Err(Error::DimensionMismatch("policy does not fit the MDP".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionBatch(pub Vec<Transition>);

impl TransitionBatch {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.0.iter()
    }

    /// `size` transitions of `mdp` with `(s, a)` uniform over all pairs and
    /// `s' ~ T(.|s, a)`.
    pub fn sample_uniform(mdp: &TabularMdp, size: usize, rng: &mut Rng) -> Self {
        let batch = (0..size)
            .map(|_| {
                let s = rng.random_range(0..mdp.n_states());
                let a = rng.random_range(0..mdp.n_actions());
                Transition { s, a, r: mdp.reward(s, a), s_next: sample_index(mdp.row(s, a), rng) }
            })
            .collect();
        Self(batch)
    }
}

fn sample_index(probs: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top; take the last state with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Indexed family of candidate models sharing shape and discount.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCandidateSet {
    models: Vec<TabularMdp>,
}

impl LatentCandidateSet {
    pub fn new(models: Vec<TabularMdp>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::EmptyCandidates);
        }
        if models.iter().any(|m| !m.same_shape(&models[0])) {
            return Err(Error::DimensionMismatch("candidates differ in shape or discount".into()));
        }
        Ok(Self { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, z: usize) -> &TabularMdp {
        &self.models[z]
    }

    pub fn iter(&self) -> impl Iterator<Item = &TabularMdp> {
        self.models.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn rows_must_be_stochastic() {
        assert!(TabularMdp::new(2, 1, vec![0.5, 0.4, 0.0, 1.0], vec![0.0, 0.0], 0.5).is_err());
        assert!(TabularMdp::new(2, 1, vec![1.5, -0.5, 0.0, 1.0], vec![0.0, 0.0], 0.5).is_err());
        assert!(TabularMdp::new(2, 1, vec![0.5, 0.5, 0.0, 1.0], vec![0.0, 0.0], 1.0).is_err());
        assert!(TabularMdp::new(2, 1, vec![0.5, 0.5, 0.0, 1.0], vec![0.0, 0.0], 0.5).is_ok());
    }

    #[test]
    fn random_mdps_are_valid() {
        let mut r = rng::stream(2, 0);
        for _ in 0..200 {
            let ns = r.random_range(1..=5);
            let na = r.random_range(1..=3);
            TabularMdp::random(ns, na, 0.9, 0.5, &mut r).unwrap();
        }
    }

    #[test]
    fn sampled_successors_have_support() {
        let mdp = TabularMdp::new(3, 1, vec![0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0], vec![0.0; 3], 0.5).unwrap();
        let batch = TransitionBatch::sample_uniform(&mdp, 500, &mut rng::stream(9, 0));
        assert!(batch.iter().all(|t| mdp.prob(t.s, t.a, t.s_next) > 0.0));
    }

    #[test]
    fn candidates_share_shape() {
        let a = TabularMdp::new(1, 1, vec![1.0], vec![0.0], 0.5).unwrap();
        let b = TabularMdp::new(1, 1, vec![1.0], vec![0.0], 0.9).unwrap();
        assert!(LatentCandidateSet::new(vec![a.clone(), b]).is_err());
        assert_eq!(LatentCandidateSet::new(vec![]).unwrap_err(), Error::EmptyCandidates);
        assert_eq!(LatentCandidateSet::new(vec![a]).unwrap().len(), 1);
    }
}
