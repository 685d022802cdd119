//! Cauchy–Binet expansion of `det Q(t)`.
//!
//! Every `d`-subset of the pooled columns corresponds to exactly one
//! selection pattern `S = (I, (S_l)_{l in I})` with `sum |S_l| = d`, and
//! `Delta_S` is the squared determinant of the selected `d x d` matrix. Then
//!
//! ```text
//! det Q(t) = sum_S exp(sum_{l in S} |S_l| t_l) Delta_S
//! ```
//!
//! and the gradient of `log det Q(t)` is the ratio of the `|S_i|`-weighted sum
//! to the plain sum. Sums are accumulated in log space so large `t` does not
//! overflow. This is an oracle: it enumerates `C(N, d)` subsets and is gated
//! by a size guard.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;
use crate::linalg;
use crate::weights::FrameDatum;

/// Largest number of minors enumerated by default.
pub const DEFAULT_SIZE_GUARD: u128 = 1_000_000;

/// Minors at or below this value are flagged as negligible.
pub const DEFAULT_MINOR_TOL: f64 = 1e-12;

/// One selection pattern and its squared minor.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorTerm {
    /// Blocks with a nonempty selection, ascending, 0-based.
    pub support: Vec<usize>,
    /// Selected column indices (0-based within the block), parallel to
    /// `support`.
    pub column_sets: Vec<Vec<usize>>,
    /// `Delta_S >= 0`.
    pub minor: f64,
    /// `Delta_S <= tol`; kept in the expansion, never dropped.
    pub negligible: bool,
}

impl MinorTerm {
    /// `|S_i|`, zero when `i` is not in the support.
    pub fn selected_in(&self, block: usize) -> usize {
        self.support.iter().position(|&b| b == block).map_or(0, |k| self.column_sets[k].len())
    }

    /// `sum_{l in S} |S_l| t_l`.
    pub fn exponent(&self, t: &DVector<f64>) -> f64 {
        self.support.iter().zip(&self.column_sets).map(|(&l, s)| s.len() as f64 * t[l]).sum()
    }

    /// `log(exp(exponent) * Delta_S)`.
    fn log_weight(&self, t: &DVector<f64>) -> f64 {
        if self.minor > 0.0 {
            self.exponent(t) + self.minor.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i as u128 + 1))
}

/// All selection patterns of a frame with their minors.
#[derive(Debug, Clone)]
pub struct MinorExpansion {
    n: usize,
    terms: Vec<MinorTerm>,
}

impl MinorExpansion {
    pub fn new(frame: &MatrixFrame, tol: f64, size_guard: u128) -> Result<Self> {
        let d = frame.dim();
        let n_cols = frame.total_columns();
        if n_cols < d {
            return Err(FrameError::Undersized { columns: n_cols, dim: d });
        }
        let count = binomial(n_cols, d);
        if count > size_guard {
            return Err(FrameError::SizeGuard { count, guard: size_guard });
        }
        let pooled = frame.pooled();
        let owners = frame.column_owners();
        let mut sub = DMatrix::zeros(d, d);
        let mut terms = Vec::with_capacity(count as usize);
        for combo in (0..n_cols).combinations(d) {
            let mut support: Vec<usize> = Vec::new();
            let mut column_sets: Vec<Vec<usize>> = Vec::new();
            for (k, &c) in combo.iter().enumerate() {
                sub.set_column(k, &pooled.column(c));
                let (block, col) = owners[c];
                if support.last() == Some(&block) {
                    column_sets.last_mut().unwrap().push(col);
                } else {
                    support.push(block);
                    column_sets.push(vec![col]);
                }
            }
            let det = linalg::determinant(&sub);
            let minor = det * det;
            terms.push(MinorTerm { support, column_sets, minor, negligible: minor <= tol });
        }
        Ok(Self { n: frame.len(), terms })
    }

    pub fn with_defaults(frame: &MatrixFrame) -> Result<Self> {
        Self::new(frame, DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD)
    }

    pub fn terms(&self) -> &[MinorTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<MinorTerm> {
        self.terms
    }

    fn check_t(&self, t: &DVector<f64>) -> Result<()> {
        if t.len() != self.n {
            return Err(FrameError::DimensionMismatch(format!("t has {} entries for {} blocks", t.len(), self.n)));
        }
        Ok(())
    }

    /// `log det Q(t)` as a log-sum-exp over the terms.
    pub fn log_det_q(&self, t: &DVector<f64>) -> Result<f64> {
        self.check_t(t)?;
        Ok(linalg::log_sum_exp(self.terms.iter().map(|s| s.log_weight(t))))
    }

    pub fn det_q(&self, t: &DVector<f64>) -> Result<f64> {
        Ok(self.log_det_q(t)?.exp())
    }

    /// Log of the numerators `sum_{S ni i} |S_i| exp(...) Delta_S` and of
    /// the common denominator.
    fn log_numerators(&self, t: &DVector<f64>) -> Result<(Vec<f64>, f64)> {
        self.check_t(t)?;
        let logw: Vec<f64> = self.terms.iter().map(|s| s.log_weight(t)).collect();
        let denom = linalg::log_sum_exp(logw.iter().copied());
        if denom == f64::NEG_INFINITY {
            return Err(FrameError::NotMatrixFrame("every maximal minor vanishes".into()));
        }
        let nums = (0..self.n)
            .map(|i| {
                linalg::log_sum_exp(self.terms.iter().zip(&logw).filter_map(|(s, &lw)| {
                    let k = s.selected_in(i);
                    (k > 0).then(|| lw + (k as f64).ln())
                }))
            })
            .collect();
        Ok((nums, denom))
    }

    /// Gradient of `log det Q(t)` as the Cauchy–Binet ratio.
    pub fn grad(&self, t: &DVector<f64>) -> Result<DVector<f64>> {
        let (nums, denom) = self.log_numerators(t)?;
        Ok(DVector::from_iterator(self.n, nums.into_iter().map(|v| (v - denom).exp())))
    }

    /// Normalized semi-algebraic residual at `xi = exp(t)`:
    /// `(sum_{S ni i} |S_i| prod xi^{|S_l|} Delta_S) / (sum_S prod xi^{|S_l|} Delta_S) - c_i`.
    pub fn variety_residual(&self, weights: &[f64], t: &DVector<f64>) -> Result<DVector<f64>> {
        if weights.len() != self.n {
            return Err(FrameError::DimensionMismatch(format!("{} weights for {} blocks", weights.len(), self.n)));
        }
        Ok(self.grad(t)? - DVector::from_column_slice(weights))
    }
}

/// All selection patterns with their minors (size-guarded).
pub fn enumerate_minors(frame: &MatrixFrame, tol: f64, size_guard: u128) -> Result<Vec<MinorTerm>> {
    Ok(MinorExpansion::new(frame, tol, size_guard)?.into_terms())
}

/// `det Q(t)` via the Cauchy–Binet sum.
pub fn det_q_cauchy_binet(frame: &MatrixFrame, t: &DVector<f64>) -> Result<f64> {
    MinorExpansion::with_defaults(frame)?.det_q(t)
}

/// `grad Phi(t)` via the Cauchy–Binet ratio.
pub fn grad_phi_cauchy_binet(frame: &MatrixFrame, t: &DVector<f64>) -> Result<DVector<f64>> {
    MinorExpansion::with_defaults(frame)?.grad(t)
}

/// Normalized residual of the semi-algebraic system at `xi = exp(t)`.
pub fn variety_residual(datum: &FrameDatum, t: &DVector<f64>, size_guard: u128) -> Result<DVector<f64>> {
    MinorExpansion::new(&datum.frame, DEFAULT_MINOR_TOL, size_guard)?.variety_residual(&datum.weights.to_f64(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn f_star() -> MatrixFrame {
        MatrixFrame::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn f_star_minors() {
        let terms = enumerate_minors(&f_star(), DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD).unwrap();
        let minors: Vec<f64> = terms.iter().map(|s| s.minor).collect();
        // Column pairs {a,b},{a,c},{a,e},{b,c},{b,e},{c,e}.
        let expected = [4.0, 1.0, 1.0, 4.0, 4.0, 4.0];
        assert_eq!(minors.len(), 6);
        for (m, e) in minors.iter().zip(expected) {
            assert_relative_eq!(*m, e, epsilon = 1e-13);
        }
        assert_eq!(terms[0].support, vec![0]);
        assert_eq!(terms[0].column_sets, vec![vec![0, 1]]);
        assert_eq!(terms[0].selected_in(0), 2);
        assert_eq!(terms[5].support, vec![1, 2]);
        assert!(terms.iter().all(|s| s.column_sets.iter().map(Vec::len).sum::<usize>() == 2));
    }

    #[test]
    fn basis_has_single_term() {
        let e = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let terms = enumerate_minors(&e, DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].minor, 1.0);
        let t = DVector::from_vec(vec![0.7, -0.2]);
        assert_relative_eq!(det_q_cauchy_binet(&e, &t).unwrap(), 0.5f64.exp(), epsilon = 1e-14);
        assert_relative_eq!(grad_phi_cauchy_binet(&e, &DVector::zeros(2)).unwrap(), DVector::from_element(2, 1.0));
    }

    #[test]
    fn zero_column_gives_zero_minors() {
        let f = MatrixFrame::from_vectors(2, &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let terms = enumerate_minors(&f, DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD).unwrap();
        assert_eq!(terms.len(), 3);
        for s in terms.iter().filter(|s| s.support.contains(&0)) {
            assert_eq!(s.minor, 0.0);
            assert!(s.negligible);
        }
    }

    #[test]
    fn f_star_determinant_and_gradient() {
        let f = f_star();
        assert_relative_eq!(det_q_cauchy_binet(&f, &DVector::zeros(3)).unwrap(), 18.0, epsilon = 1e-12);
        let t = DVector::from_vec(vec![2f64.ln(), 0.0, 0.0]);
        assert_relative_eq!(det_q_cauchy_binet(&f, &t).unwrap(), 40.0, epsilon = 1e-12);
        let g = grad_phi_cauchy_binet(&f, &DVector::zeros(3)).unwrap();
        assert_relative_eq!(g, DVector::from_vec(vec![1.0, 0.5, 0.5]), epsilon = 1e-14);
    }

    #[test]
    fn survives_large_exponents() {
        let t = DVector::from_vec(vec![400.0, 400.0, 400.0]);
        let log_det = MinorExpansion::with_defaults(&f_star()).unwrap().log_det_q(&t).unwrap();
        assert_relative_eq!(log_det, 18f64.ln() + 800.0, epsilon = 1e-10);
        let g = grad_phi_cauchy_binet(&f_star(), &t).unwrap();
        assert_relative_eq!(g, DVector::from_vec(vec![1.0, 0.5, 0.5]), epsilon = 1e-12);
    }

    #[test]
    fn guards_and_errors() {
        let small = MatrixFrame::from_vectors(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(
            enumerate_minors(&small, DEFAULT_MINOR_TOL, DEFAULT_SIZE_GUARD),
            Err(FrameError::Undersized { .. })
        ));
        assert!(matches!(enumerate_minors(&f_star(), DEFAULT_MINOR_TOL, 5), Err(FrameError::SizeGuard { .. })));
        let collinear = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(grad_phi_cauchy_binet(&collinear, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(18, 4), 3060);
        assert_eq!(binomial(3, 5), 0);
    }
}
