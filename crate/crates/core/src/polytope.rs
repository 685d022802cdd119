//! Orbit-polytope membership of frame weights.
//!
//! `c` lies in the orbit polytope of `F` when `sum c_i = d` and, for every
//! nonempty `I`, `sum_{i in I} c_i <= dim(sum_{i in I} Col(X_i))`. This is the
//! semi-stability condition of the frame representation for the induced
//! weight. Both sides of every constraint are compared exactly; only the rank
//! computation uses a tolerance. All `2^n - 1` subsets are enumerated, so
//! the cost is exponential in `n` (fine for `n` up to about 20).

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;
use crate::weights::FrameDatum;

/// Outcome of the orbit-polytope test. Subsets are 0-based index lists,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolytopeReport {
    pub member: bool,
    pub sum_check: bool,
    /// Proper subsets whose constraint holds with equality (the full index
    /// set is covered by `sum_check`).
    pub tight_subsets: Vec<Vec<usize>>,
    /// Constraints that fail.
    pub violating_subsets: Vec<Vec<usize>>,
    /// Tight subsets with rank below `d`.
    cutting_tight: Vec<Vec<usize>>,
}

impl PolytopeReport {
    /// In the relative interior: a member whose every cutting constraint
    /// (rank below `d`, proper subset) is strict.
    pub fn in_relative_interior(&self) -> bool {
        self.member && self.cutting_tight.is_empty()
    }
}

fn subset_of(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask & (1 << i) != 0).collect()
}

/// Full polytope report for `(F, c)`.
pub fn in_orbit_polytope(datum: &FrameDatum, tol: f64) -> PolytopeReport {
    let frame = &datum.frame;
    let n = frame.len();
    assert!(n < 64, "subset enumeration supports at most 63 blocks");
    let d = frame.dim();
    let sum_check = datum.sums_to_dim();
    let mut tight = Vec::new();
    let mut violating = Vec::new();
    let mut cutting_tight = Vec::new();
    let full: u64 = (1u64 << n) - 1;
    for mask in 1..=full {
        let subset = subset_of(mask, n);
        let lhs = datum.weights.subset_sum(&subset);
        let rank = frame.column_span_dim(&subset, tol);
        let rhs = BigRational::from_integer(BigInt::from(rank));
        if lhs > rhs {
            violating.push(subset);
        } else if lhs == rhs && mask != full {
            if rank < d {
                cutting_tight.push(subset.clone());
            }
            tight.push(subset);
        }
    }
    tight.sort();
    violating.sort();
    cutting_tight.sort();
    PolytopeReport {
        member: sum_check && violating.is_empty(),
        sum_check,
        tight_subsets: tight,
        violating_subsets: violating,
        cutting_tight,
    }
}

/// `c` in the relative interior of the orbit polytope.
pub fn in_relative_interior(datum: &FrameDatum, tol: f64) -> bool {
    in_orbit_polytope(datum, tol).in_relative_interior()
}

/// Genericity as a certificate of `sigma_0`-stability with
/// `sigma_0(0) = n`, `sigma_0(i) = -d`; requires `n > d`.
pub fn check_sigma0_stability(frame: &MatrixFrame, tol: f64) -> Result<bool> {
    if frame.len() <= frame.dim() {
        return Err(FrameError::TooFewBlocks { n: frame.len(), d: frame.dim() });
    }
    frame.is_generic(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::DEFAULT_TOL;
    use crate::weights::WeightVector;
    use nalgebra::DMatrix;

    fn f_star() -> MatrixFrame {
        MatrixFrame::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, -1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        ])
        .unwrap()
    }

    fn collinear_d() -> MatrixFrame {
        MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    fn thirds() -> WeightVector {
        WeightVector::from_ratios(&[(2, 3), (2, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn f_star_is_interior_member() {
        let datum = FrameDatum::new(f_star(), thirds()).unwrap();
        let report = in_orbit_polytope(&datum, DEFAULT_TOL);
        assert!(report.member && report.sum_check);
        assert!(report.violating_subsets.is_empty());
        assert!(report.tight_subsets.is_empty());
        assert!(report.in_relative_interior());
    }

    #[test]
    fn collinear_pair_violates() {
        let datum = FrameDatum::new(collinear_d(), thirds()).unwrap();
        let report = in_orbit_polytope(&datum, DEFAULT_TOL);
        assert!(!report.member);
        assert_eq!(report.violating_subsets, vec![vec![0, 1]]);
        assert!(!in_relative_interior(&datum, DEFAULT_TOL));
    }

    #[test]
    fn orthonormal_basis_is_on_boundary() {
        let e = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let datum = FrameDatum::new(e, WeightVector::from_ratios(&[(1, 1), (1, 1)]).unwrap()).unwrap();
        let report = in_orbit_polytope(&datum, DEFAULT_TOL);
        assert!(report.member);
        assert_eq!(report.tight_subsets, vec![vec![0], vec![1]]);
        assert!(!report.in_relative_interior());
    }

    #[test]
    fn wrong_sum_is_reported() {
        let datum = FrameDatum::new(f_star(), WeightVector::from_ratios(&[(1, 3), (1, 3), (1, 3)]).unwrap()).unwrap();
        let report = in_orbit_polytope(&datum, DEFAULT_TOL);
        assert!(!report.sum_check);
        assert!(!report.member);
    }

    #[test]
    fn sigma0_stability() {
        assert!(check_sigma0_stability(&f_star(), DEFAULT_TOL).unwrap());
        assert!(!check_sigma0_stability(&collinear_d(), DEFAULT_TOL).unwrap());
        let e = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(check_sigma0_stability(&e, DEFAULT_TOL).is_err());
    }
}
