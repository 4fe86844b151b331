//! Models that the population task-relevant loss cannot distinguish from the
//! truth.
//!
//! For a fixed positive-definite `P` with square root `L`, every
//! `Theta = L^-1 V L Theta*` with `V` orthogonal satisfies
//! `Theta' P Theta = Theta*' P Theta*`, so it predicts next states on the same
//! `P`-ellipsoid as the true plant and attains zero task-relevant loss on
//! noiseless data.

use nalgebra::DVector;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::lqr::{SystemParams, ValueMatrix};
use crate::rng::Rng;

pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Eigenvalue floor for the square root of `P`.
pub const SQRT_EIG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalMatrix(Mat);

impl OrthogonalMatrix {
    pub fn new(v: Mat) -> Result<Self> {
        if !v.is_square() {
            return Err(Error::DimensionMismatch("orthogonal matrix must be square".into()));
        }
        let n = v.nrows();
        let resid = (v.transpose() * &v - Mat::identity(n, n)).norm();
        if !(resid <= ORTHOGONALITY_TOL) {
            return Err(Error::InvalidConfig(format!("V'V - I has norm {resid:e}")));
        }
        Ok(Self(v))
    }

    pub fn identity(n: usize) -> Self {
        Self(Mat::identity(n, n))
    }

    pub fn matrix(&self) -> &Mat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `self * other`.
    pub fn compose(&self, other: &OrthogonalMatrix) -> OrthogonalMatrix {
        OrthogonalMatrix(&self.0 * &other.0)
    }
}

/// Haar-distributed sample from `O(n)`: QR of a Gaussian matrix with the
/// signs of `diag(R)` folded into `Q`.
pub fn random_orthogonal(n: usize, rng: &mut Rng) -> OrthogonalMatrix {
    assert!(n >= 1, "O(0) is not sampled");
    let g = Mat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let signs = DVector::from_fn(n, |i, _| if r[(i, i)] < 0.0 { -1.0 } else { 1.0 });
    let q = qr.q() * Mat::from_diagonal(&signs);
    OrthogonalMatrix(q)
}

/// `L^-1 V L Theta*` with `L` the symmetric square root of `P`.
pub fn orbit_member(theta_star: &SystemParams, p: &ValueMatrix, v: &OrthogonalMatrix) -> Result<SystemParams> {
    let n = theta_star.n();
    if p.dim() != n || v.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "state dimension {n}, P is {}x{}, V is {}x{}",
            p.dim(),
            p.dim(),
            v.dim(),
            v.dim()
        )));
    }
    let (min_eig, _) = linalg::sym_eig_range(p.matrix());
    if !(min_eig > SQRT_EIG_FLOOR) {
        return Err(Error::SingularP);
    }
    let l = linalg::sym_sqrt(p.matrix(), SQRT_EIG_FLOOR);
    let l_inv = linalg::sym_inv_sqrt(p.matrix(), SQRT_EIG_FLOOR);
    let action = l_inv * v.matrix() * l;
    SystemParams::from_theta(&(action * theta_star.theta()), n)
}

/// `||Theta' P Theta - Theta*' P Theta*||_F`.
pub fn value_gram_gap(theta: &SystemParams, theta_star: &SystemParams, p: &ValueMatrix) -> Result<f64> {
    if theta.n() != theta_star.n() || theta.m() != theta_star.m() || p.dim() != theta.n() {
        return Err(Error::DimensionMismatch("theta, theta_star and P disagree in size".into()));
    }
    let gram = |s: &SystemParams| {
        let t = s.theta();
        t.transpose() * p.matrix() * t
    };
    Ok((gram(theta) - gram(theta_star)).norm())
}

pub fn is_value_equivalent(theta: &SystemParams, theta_star: &SystemParams, p: &ValueMatrix, tol: f64) -> bool {
    value_gram_gap(theta, theta_star, p).is_ok_and(|gap| gap <= tol)
}
