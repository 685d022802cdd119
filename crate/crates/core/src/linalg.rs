//! Small dense linear-algebra helpers shared by the frame modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{FrameError, Result};

/// Relative eigenvalue floor below which a PSD matrix is treated as singular
/// when forming its inverse square root.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Spectral norm of `m - I`.
pub fn identity_deviation(m: &DMatrix<f64>) -> f64 {
    let id = DMatrix::<f64>::identity(m.nrows(), m.ncols());
    spectral_norm(&(m - id))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

/// Ascending eigenvalues of the symmetric part of `m`.
pub fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut vals: Vec<f64> = symmetric_eigen(m).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// `Q^{-1/2}` for symmetric positive definite `Q`.
///
/// Rejects `Q` whose smallest eigenvalue is below `EIGEN_FLOOR` times the
/// largest one.
pub fn inv_sqrt_spd(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(q);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || !min.is_finite() || min <= EIGEN_FLOOR * max {
        return Err(FrameError::NotMatrixFrame(format!(
            "eigenvalues in [{min:e}, {max:e}] fall below the relative floor {EIGEN_FLOOR:e}"
        )));
    }
    let scale = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.sqrt().recip()));
    let v = &eig.eigenvectors;
    let inv = v * DMatrix::from_diagonal(&scale) * v.transpose();
    Ok(symmetrize(&inv))
}

/// `log det Q` through a Cholesky factor.
pub fn log_det_spd(q: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(symmetrize(q)).ok_or_else(|| {
        FrameError::NotMatrixFrame("Cholesky factorization failed (matrix not positive definite)".into())
    })?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for k in 0..l.nrows() {
        let diag = l[(k, k)];
        if !(diag > 0.0) {
            return Err(FrameError::NotMatrixFrame("zero pivot in Cholesky factor".into()));
        }
        acc += diag.ln();
    }
    Ok(2.0 * acc)
}

/// Numerical rank: singular values strictly above `tol * largest`.
pub fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let max = sv.max();
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// Determinant of a square matrix through LU.
pub fn determinant(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum()
}

/// `log(sum(exp(xs)))`, with `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
