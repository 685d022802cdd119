//! The log-determinant objective `Phi(t) = log det Q(t)`,
//! `Q(t) = sum_i e^{t_i} X_i X_i^T`, its gradient, and capacity arithmetic.
//!
//! The gradient is available through two independent routes: the analytic
//! formula `e^{t_i} ||Q^{-1/2}(t) X_i||_F^2` (this module) and the
//! Cauchy–Binet ratio over squared maximal minors ([`cauchy_binet`]).

pub mod cauchy_binet;

use nalgebra::{DMatrix, DVector};

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;
use crate::linalg;
use crate::weights::FrameDatum;

pub use cauchy_binet::{
    det_q_cauchy_binet, enumerate_minors, grad_phi_cauchy_binet, MinorExpansion, MinorTerm, DEFAULT_SIZE_GUARD,
};

fn check_len(frame: &MatrixFrame, t: &DVector<f64>) -> Result<()> {
    if t.len() != frame.len() {
        return Err(FrameError::DimensionMismatch(format!("t has {} entries for {} blocks", t.len(), frame.len())));
    }
    Ok(())
}

/// `Q(t) = sum_i e^{t_i} X_i X_i^T`.
pub fn q_matrix(frame: &MatrixFrame, t: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len(frame, t)?;
    let d = frame.dim();
    let mut q = DMatrix::zeros(d, d);
    for (x, &ti) in frame.blocks().iter().zip(t.iter()) {
        let w = ti.exp();
        if !w.is_finite() || !ti.is_finite() {
            return Err(FrameError::Domain(format!(
                "exp({ti}) is not finite; recenter t by a multiple of the all-ones vector"
            )));
        }
        q += x * x.transpose() * w;
    }
    Ok(linalg::symmetrize(&q))
}

/// `Phi(t) = log det Q(t)`, through a Cholesky factor.
pub fn phi(frame: &MatrixFrame, t: &DVector<f64>) -> Result<f64> {
    linalg::log_det_spd(&q_matrix(frame, t)?)
}

/// `dPhi/dt_i = e^{t_i} ||Q^{-1/2}(t) X_i||_F^2`.
pub fn grad_phi(frame: &MatrixFrame, t: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(ObjectiveState::evaluate(frame, t)?.grad)
}

/// Everything the solver needs at one point `t`.
#[derive(Debug, Clone)]
pub struct ObjectiveState {
    pub t: DVector<f64>,
    pub q: DMatrix<f64>,
    /// `Q^{-1/2}(t)`.
    pub q_inv_sqrt: DMatrix<f64>,
    pub phi: f64,
    pub grad: DVector<f64>,
}

impl ObjectiveState {
    pub fn evaluate(frame: &MatrixFrame, t: &DVector<f64>) -> Result<Self> {
        let q = q_matrix(frame, t)?;
        let phi = linalg::log_det_spd(&q)?;
        let q_inv_sqrt = linalg::inv_sqrt_spd(&q)?;
        let grad = DVector::from_iterator(
            frame.len(),
            frame.blocks().iter().zip(t.iter()).map(|(x, &ti)| ti.exp() * linalg::frobenius_sq(&(&q_inv_sqrt * x))),
        );
        Ok(Self { t: t.clone(), q, q_inv_sqrt, phi, grad })
    }

    /// `||Q^{-1/2}(t) X_i||_F^2` for every block.
    pub fn whitened_norms_sq(&self, frame: &MatrixFrame) -> Vec<f64> {
        frame.blocks().iter().map(|x| linalg::frobenius_sq(&(&self.q_inv_sqrt * x))).collect()
    }
}

/// `Phi(t) - <t, c>`.
pub fn objective(datum: &FrameDatum, t: &DVector<f64>) -> Result<f64> {
    let c = DVector::from_vec(datum.weights.to_f64());
    Ok(phi(&datum.frame, t)? - t.dot(&c))
}

/// Gradient of [`objective`]: `grad Phi(t) - c`.
pub fn objective_gradient(datum: &FrameDatum, t: &DVector<f64>) -> Result<DVector<f64>> {
    let c = DVector::from_vec(datum.weights.to_f64());
    Ok(grad_phi(&datum.frame, t)? - c)
}

/// `log cap(F, c) = f + sum_i c_i log c_i`; `-inf` propagates.
pub fn log_capacity(datum: &FrameDatum, f_value: f64) -> f64 {
    if f_value == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    f_value + datum.weights.entropy_term()
}

/// Logarithm of the capacity ratio of the frame representation evaluated at
/// positive scalars `y`:
/// `log det(sum_i c_i y_i X_i X_i^T) - sum_i c_i log y_i`.
///
/// At a Gaussian extremiser this equals the log-capacity.
pub fn capacity_log_ratio(datum: &FrameDatum, y: &[f64]) -> Result<f64> {
    let frame = &datum.frame;
    if y.len() != frame.len() {
        return Err(FrameError::DimensionMismatch(format!("{} scalars for {} blocks", y.len(), frame.len())));
    }
    if y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(FrameError::Domain("capacity scalars must be positive and finite".into()));
    }
    let c = datum.weights.to_f64();
    let d = frame.dim();
    let mut m = DMatrix::zeros(d, d);
    for ((x, ci), yi) in frame.blocks().iter().zip(&c).zip(y) {
        m += x * x.transpose() * (ci * yi);
    }
    let penalty: f64 = c.iter().zip(y).map(|(ci, yi)| ci * yi.ln()).sum();
    Ok(linalg::log_det_spd(&m)? - penalty)
}
