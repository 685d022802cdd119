//! Matrix frames: tuples of `d x d_i` real blocks sharing the row dimension.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{FrameError, Result};
use crate::linalg;

/// Default relative tolerance for rank and definiteness predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// An ordered tuple of blocks `X_1, ..., X_n`, block `i` of shape `d x d_i`.
///
/// Blocks are immutable values; every transform returns a new frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFrame {
    dim: usize,
    blocks: Vec<DMatrix<f64>>,
}

impl MatrixFrame {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Result<Self> {
        let first =
            blocks.first().ok_or_else(|| FrameError::InvalidFrame("a frame needs at least one block".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(FrameError::InvalidFrame("ambient dimension must be positive".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.nrows() != dim {
                return Err(FrameError::InvalidFrame(format!("block {i} has {} rows, expected {dim}", b.nrows())));
            }
            if b.ncols() == 0 {
                return Err(FrameError::InvalidFrame(format!("block {i} has no columns")));
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(FrameError::InvalidFrame(format!("block {i} has a non-finite entry")));
            }
        }
        Ok(Self { dim, blocks })
    }

    /// Frame of single-column blocks.
    pub fn from_vectors(dim: usize, vectors: &[Vec<f64>]) -> Result<Self> {
        let blocks = vectors
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if v.len() != dim {
                    return Err(FrameError::InvalidFrame(format!("vector {i} has length {}, expected {dim}", v.len())));
                }
                Ok(DMatrix::from_column_slice(dim, 1, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(blocks)
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks `n`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block(&self, i: usize) -> &DMatrix<f64> {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<DMatrix<f64>> {
        self.blocks
    }

    /// Column counts `d_1, ..., d_n`.
    pub fn widths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }

    /// Total column count `N`.
    pub fn total_columns(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }

    /// `(block, column)` of every pooled column, in pooled order.
    pub fn column_owners(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().enumerate().flat_map(|(i, b)| (0..b.ncols()).map(move |l| (i, l))).collect()
    }

    /// The `d x N` matrix `[X_1 | ... | X_n]`.
    pub fn pooled(&self) -> DMatrix<f64> {
        self.pooled_subset(&(0..self.len()).collect::<Vec<_>>())
    }

    fn pooled_subset(&self, subset: &[usize]) -> DMatrix<f64> {
        let cols: usize = subset.iter().map(|&i| self.blocks[i].ncols()).sum();
        let mut out = DMatrix::zeros(self.dim, cols);
        let mut at = 0;
        for &i in subset {
            let b = &self.blocks[i];
            out.columns_mut(at, b.ncols()).copy_from(b);
            at += b.ncols();
        }
        out
    }

    /// Squared Frobenius norms `||X_i||_F^2`.
    pub fn block_norms_sq(&self) -> Vec<f64> {
        self.blocks.iter().map(linalg::frobenius_sq).collect()
    }

    /// `S = sum_i X_i X_i^T`.
    pub fn frame_operator(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            s += b * b.transpose();
        }
        linalg::symmetrize(&s)
    }

    /// `S` positive definite: `lambda_min > tol * max(lambda_max, 1)`.
    pub fn is_matrix_frame(&self, tol: f64) -> bool {
        let vals = linalg::sorted_eigenvalues(&self.frame_operator());
        let min = vals[0];
        let max = *vals.last().unwrap();
        min > tol * max.max(1.0)
    }

    /// `{A X_1, ..., A X_n}`.
    pub fn transform(&self, a: &DMatrix<f64>) -> Result<MatrixFrame> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(FrameError::DimensionMismatch(format!(
                "transform is {}x{}, frame dimension is {}",
                a.nrows(),
                a.ncols(),
                self.dim
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(FrameError::Domain("transform has a non-finite entry".into()));
        }
        MatrixFrame::new(self.blocks.iter().map(|b| a * b).collect())
    }

    /// Replace each block by `s_i * X_i`.
    pub fn scale_blocks(&self, scales: &[f64]) -> Result<MatrixFrame> {
        if scales.len() != self.len() {
            return Err(FrameError::DimensionMismatch(format!("{} scales for {} blocks", scales.len(), self.len())));
        }
        MatrixFrame::new(self.blocks.iter().zip(scales).map(|(b, s)| b * *s).collect())
    }

    /// Every `d`-subset of the pooled columns is a basis.
    ///
    /// The pooled matrix is first divided by its largest absolute entry and a
    /// subset counts as a basis when `|det| > tol`. All `C(N, d)` subsets are
    /// enumerated, so the cost is exponential in `d`.
    pub fn is_generic(&self, tol: f64) -> Result<bool> {
        let n_cols = self.total_columns();
        if n_cols < self.dim {
            return Err(FrameError::Undersized { columns: n_cols, dim: self.dim });
        }
        let pooled = self.pooled();
        let scale = pooled.amax();
        if scale == 0.0 {
            return Ok(false);
        }
        let pooled = pooled / scale;
        let mut sub = DMatrix::zeros(self.dim, self.dim);
        for combo in (0..n_cols).combinations(self.dim) {
            for (k, &c) in combo.iter().enumerate() {
                sub.set_column(k, &pooled.column(c));
            }
            if linalg::determinant(&sub).abs() <= tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Numerical dimension of `sum_{i in I} Col(X_i)`; indices are 0-based.
    pub fn column_span_dim(&self, subset: &[usize], tol: f64) -> usize {
        if subset.is_empty() {
            return 0;
        }
        linalg::numerical_rank(&self.pooled_subset(subset), tol)
    }

    /// Split every block into its columns (one single-column block each).
    pub fn column_split(&self) -> MatrixFrame {
        let blocks = self
            .blocks
            .iter()
            .flat_map(|b| b.column_iter().map(|c| DMatrix::from_column_slice(self.dim, 1, c.as_slice())))
            .collect();
        MatrixFrame { dim: self.dim, blocks }
    }

    /// Same `d` and same block widths.
    pub fn same_shape(&self, other: &MatrixFrame) -> bool {
        self.dim == other.dim && self.widths() == other.widths()
    }
}

/// `dist^2(F, G) = sum_i ||X_i - Y_i||_F^2`.
pub fn dist_squared(a: &MatrixFrame, b: &MatrixFrame) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(FrameError::DimensionMismatch(format!(
            "frames have shapes d={} {:?} and d={} {:?}",
            a.dim(),
            a.widths(),
            b.dim(),
            b.widths()
        )));
    }
    Ok(a.blocks().iter().zip(b.blocks()).map(|(x, y)| linalg::frobenius_sq(&(x - y))).sum())
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

    fn basis(d: usize) -> MatrixFrame {
        MatrixFrame::new((0..d).map(|k| DMatrix::identity(d, d).columns(k, 1).into_owned()).collect()).unwrap()
    }

    #[test]
    fn rejects_malformed_blocks() {
        assert!(MatrixFrame::new(vec![]).is_err());
        assert!(MatrixFrame::new(vec![DMatrix::zeros(2, 1), DMatrix::zeros(3, 1)]).is_err());
        assert!(MatrixFrame::new(vec![DMatrix::zeros(2, 0)]).is_err());
        assert!(MatrixFrame::new(vec![DMatrix::from_element(2, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn frame_operator_examples() {
        assert_eq!(f_star().frame_operator(), DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 6.0]));
        assert_eq!(basis(2).frame_operator(), DMatrix::identity(2, 2));
        let zero = MatrixFrame::new(vec![DMatrix::zeros(3, 1)]).unwrap();
        assert_eq!(zero.frame_operator(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn matrix_frame_predicate() {
        assert!(f_star().is_matrix_frame(DEFAULT_TOL));
        assert!(basis(4).is_matrix_frame(DEFAULT_TOL));
        let collinear = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert!(!collinear.is_matrix_frame(DEFAULT_TOL));
    }

    #[test]
    fn transform_examples() {
        let f = f_star();
        assert_eq!(f.transform(&DMatrix::identity(2, 2)).unwrap(), f);
        let scaled = basis(2).transform(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(scaled.block(0).as_slice(), &[2.0, 0.0]);
        assert_eq!(scaled.block(1).as_slice(), &[0.0, 1.0]);
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 3.0]);
        let back = f.transform(&a.clone().try_inverse().unwrap()).unwrap().transform(&a).unwrap();
        assert!(dist_squared(&back, &f).unwrap() < 1e-24);
        assert!(f.transform(&DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn dist_examples() {
        let f = f_star();
        assert_eq!(dist_squared(&f, &f).unwrap(), 0.0);
        let a = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0]]).unwrap();
        let b = MatrixFrame::from_vectors(2, &[vec![0.0, 1.0]]).unwrap();
        assert_eq!(dist_squared(&a, &b).unwrap(), 2.0);
        let mut blocks = f.clone().into_blocks();
        blocks[1] = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(dist_squared(&f, &MatrixFrame::new(blocks).unwrap()).unwrap(), 1.0);
        assert!(dist_squared(&f, &basis(2)).is_err());
    }

    #[test]
    fn genericity_examples() {
        assert!(f_star().is_generic(DEFAULT_TOL).unwrap());
        let repeated = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(!repeated.is_generic(DEFAULT_TOL).unwrap());
        assert!(basis(3).is_generic(DEFAULT_TOL).unwrap());
        let small = MatrixFrame::from_vectors(3, &[vec![1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(small.is_generic(DEFAULT_TOL), Err(FrameError::Undersized { .. })));
    }

    #[test]
    fn column_span_examples() {
        assert_eq!(f_star().column_span_dim(&[1, 2], DEFAULT_TOL), 2);
        assert_eq!(f_star().column_span_dim(&[], DEFAULT_TOL), 0);
        let collinear = MatrixFrame::from_vectors(2, &[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(collinear.column_span_dim(&[0, 1], DEFAULT_TOL), 1);
    }

    #[test]
    fn column_split_keeps_columns() {
        let split = f_star().column_split();
        assert_eq!(split.widths(), vec![1, 1, 1, 1]);
        assert_eq!(split.pooled(), f_star().pooled());
        assert_relative_eq!(split.frame_operator()[(1, 1)], 6.0);
    }
}
