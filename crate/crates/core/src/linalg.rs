//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

pub type Mat = DMatrix<f64>;

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &Mat) -> f64 {
    assert!(m.is_square(), "spectral_radius needs a square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Operator 2-norm (largest singular value).
pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Singular values sorted in descending order.
pub fn singular_values_desc(m: &Mat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// Extreme eigenvalues (min, max) of the symmetric part of `m`.
pub fn sym_eig_range(m: &Mat) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetrize(m));
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Symmetric PSD square root via eigendecomposition, clamping eigenvalues
/// below `floor` to `floor`.
pub fn sym_sqrt(m: &Mat, floor: f64) -> Mat {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| l.max(floor).sqrt());
    let q = &eig.eigenvectors;
    q * Mat::from_diagonal(&roots) * q.transpose()
}

/// Inverse of the symmetric square root, with the same clamping.
pub fn sym_inv_sqrt(m: &Mat, floor: f64) -> Mat {
    let eig = SymmetricEigen::new(symmetrize(m));
    let roots = eig.eigenvalues.map(|l| 1.0 / l.max(floor).sqrt());
    let q = &eig.eigenvectors;
    q * Mat::from_diagonal(&roots) * q.transpose()
}

pub fn all_finite(m: &Mat) -> bool {
    m.iter().all(|x| x.is_finite())
}
