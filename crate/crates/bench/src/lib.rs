//! Shared fixtures for the benchmarks.

use taskrel_core::experiment;
use taskrel_core::ident;
use taskrel_core::lqr::{self, Gain, LqrProblem, SystemParams};
use taskrel_core::rng;

/// Random unstable plant with unit costs, `gamma = 0.9`.
pub fn plant(n: usize, m: usize, seed: u64) -> (SystemParams, LqrProblem) {
    let sys = experiment::true_system(n, m, seed).expect("plant generation");
    (sys, LqrProblem::identity_costs(n, m, 0.9, 1.0).expect("valid costs"))
}

/// Plant plus its optimal gain.
pub fn controlled_plant(n: usize, m: usize, seed: u64) -> (SystemParams, LqrProblem, Gain) {
    let (sys, prob) = plant(n, m, seed);
    let p = lqr::solve_dare(&sys, &prob, lqr::DARE_TOL, lqr::DARE_MAX_ITER).expect("stabilizable");
    let k = lqr::gain_from_value(&sys, &prob, &p).expect("gain");
    (sys, prob, k)
}

/// Starting model for SGD benchmarks.
pub fn perturbed(sys: &SystemParams, seed: u64) -> SystemParams {
    ident::rank_one_perturb(sys, 0.1, &mut rng::stream(seed, experiment::PERTURB_STREAM)).expect("perturbation")
}
