//! Small fixed-size matrix helpers shared by the filter and the noise models.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};

pub type Vector6 = SVector<f64, 6>;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Vector2 = SVector<f64, 2>;
pub type Matrix2 = SMatrix<f64, 2, 2>;
pub type Matrix2x6 = SMatrix<f64, 2, 6>;

/// Tolerance used for symmetry and semi-definiteness checks.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(angle: f64) -> f64 {
    if !angle.is_finite() {
        return angle;
    }
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Replaces `m` with `(m + m^T) / 2`.
pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

pub fn max_asymmetry<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    (m - m.transpose()).abs().max()
}

// Const-generic matrices lack the typenum bounds the eigen solver needs, so
// decompositions go through a dynamic copy.
fn eigen<const N: usize>(m: &SMatrix<f64, N, N>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    DMatrix::from_column_slice(N, N, symmetrize(m).as_slice()).symmetric_eigen()
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    eigen(m).eigenvalues.min()
}

/// Symmetric within [`PSD_TOLERANCE`] (scaled by magnitude) and no eigenvalue
/// below `-PSD_TOLERANCE`.
pub fn is_psd<const N: usize>(m: &SMatrix<f64, N, N>) -> bool {
    if m.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let scale = m.abs().max().max(1.0);
    max_asymmetry(m) <= PSD_TOLERANCE * scale && min_eigenvalue(m) >= -PSD_TOLERANCE * scale
}

/// A square root `L` with `L * L^T == m` for a PSD matrix, computed through
/// the symmetric eigendecomposition so singular (e.g. all-zero) covariances
/// are handled.
pub fn psd_sqrt<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let eig = eigen(m);
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let l = eig.eigenvectors * DMatrix::from_diagonal(&roots);
    SMatrix::<f64, N, N>::from_column_slice(l.as_slice())
}

/// Condition number of a symmetric matrix from its eigenvalues; infinite if
/// the matrix is not positive definite.
pub fn condition_number<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let eig = eigen(m).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 || !lo.is_finite() || !hi.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}
