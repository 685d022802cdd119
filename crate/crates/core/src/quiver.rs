//! Frame predicates (Parseval, equal-norm, nearly Parseval, radial isotropy)
//! and their quiver counterparts: bipartite representations, geometric BL
//! data and `sigma`-critical representations.
//!
//! Every matrix equation is measured in spectral norm.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;
use crate::linalg;
use crate::weights::{rational_to_f64, FrameDatum, StabilityWeight, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub source: usize,
    pub sink: usize,
    /// `sink_dim x source_dim`.
    pub map: DMatrix<f64>,
}

/// Representation of a bipartite quiver with every arrow running from a
/// source vertex to a sink vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteQuiverRep {
    source_dims: Vec<usize>,
    sink_dims: Vec<usize>,
    arrows: Vec<Arrow>,
}

impl BipartiteQuiverRep {
    pub fn new(source_dims: Vec<usize>, sink_dims: Vec<usize>, arrows: Vec<Arrow>) -> Result<Self> {
        for (k, a) in arrows.iter().enumerate() {
            let (Some(&sd), Some(&td)) = (source_dims.get(a.source), sink_dims.get(a.sink)) else {
                return Err(FrameError::InvalidFrame(format!("arrow {k} references a missing vertex")));
            };
            if a.map.shape() != (td, sd) {
                return Err(FrameError::DimensionMismatch(format!(
                    "arrow {k} has shape {:?}, expected ({td}, {sd})",
                    a.map.shape()
                )));
            }
        }
        Ok(Self { source_dims, sink_dims, arrows })
    }

    /// One source of dimension `d`, one sink of dimension 1 per block, and
    /// one arrow `x_{i,l}^T` per column.
    pub fn from_frame(frame: &MatrixFrame) -> Self {
        let arrows = frame
            .blocks()
            .iter()
            .enumerate()
            .flat_map(|(i, x)| {
                x.column_iter().map(move |col| Arrow {
                    source: 0,
                    sink: i,
                    map: DMatrix::from_row_slice(1, col.len(), col.as_slice()),
                })
            })
            .collect();
        Self { source_dims: vec![frame.dim()], sink_dims: vec![1; frame.len()], arrows }
    }

    pub fn source_dims(&self) -> &[usize] {
        &self.source_dims
    }

    pub fn sink_dims(&self) -> &[usize] {
        &self.sink_dims
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    /// `sum_{a: tail a = j} w(a) V(a)^T V(a)` for every source `j`.
    fn source_sums(&self, weight: impl Fn(&Arrow) -> f64) -> Vec<DMatrix<f64>> {
        let mut sums: Vec<DMatrix<f64>> = self.source_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for a in &self.arrows {
            sums[a.source] += a.map.transpose() * &a.map * weight(a);
        }
        sums
    }

    /// `sum_{a: head a = i} V(a) V(a)^T` for every sink `i`.
    fn sink_sums(&self) -> Vec<DMatrix<f64>> {
        let mut sums: Vec<DMatrix<f64>> = self.sink_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for a in &self.arrows {
            sums[a.sink] += &a.map * a.map.transpose();
        }
        sums
    }
}

fn scaled_identity_deviation(m: &DMatrix<f64>, s: f64) -> f64 {
    let target = DMatrix::<f64>::identity(m.nrows(), m.ncols()) * s;
    linalg::spectral_norm(&(m - target))
}

/// How far a frame is from an equal-norm Parseval frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearnessReport {
    pub epsilon_operator: f64,
    pub epsilon_norms: f64,
    pub epsilon: f64,
}

/// Smallest `eps` with `(1-eps) I <= S <= (1+eps) I` and
/// `(1-eps) d/n <= ||X_i||^2 <= (1+eps) d/n`.
pub fn nearness(frame: &MatrixFrame) -> NearnessReport {
    let eig = linalg::sorted_eigenvalues(&frame.frame_operator());
    let lo = eig.first().copied().unwrap_or(0.0);
    let hi = eig.last().copied().unwrap_or(0.0);
    let epsilon_operator = (1.0 - lo).max(hi - 1.0).max(0.0);
    let target = frame.dim() as f64 / frame.len() as f64;
    let epsilon_norms = frame.block_norms_sq().iter().map(|v| (v / target - 1.0).abs()).fold(0.0, f64::max);
    NearnessReport { epsilon_operator, epsilon_norms, epsilon: epsilon_operator.max(epsilon_norms) }
}

/// `sum c_i X_i X_i^T = I` and `||X_i||_F^2 = 1`, within `tol`.
pub fn is_pmf(datum: &FrameDatum, tol: f64) -> bool {
    let c = datum.weights.to_f64();
    let d = datum.frame.dim();
    let mut s = DMatrix::zeros(d, d);
    for (x, ci) in datum.frame.blocks().iter().zip(&c) {
        s += x * x.transpose() * *ci;
    }
    linalg::identity_deviation(&s) <= tol && datum.frame.block_norms_sq().iter().all(|v| (v - 1.0).abs() <= tol)
}

/// `sum X_i X_i^T = I` and `||X_i||_F^2 = d/n`, within `tol`.
pub fn is_equal_norm_pmf(frame: &MatrixFrame, tol: f64) -> bool {
    let target = frame.dim() as f64 / frame.len() as f64;
    linalg::identity_deviation(&frame.frame_operator()) <= tol
        && frame.block_norms_sq().iter().all(|v| (v - target).abs() <= tol)
}

/// `sum_i c_i X_i X_i^T / ||X_i||_F^2`.
pub fn rif_sum(datum: &FrameDatum) -> Result<DMatrix<f64>> {
    let d = datum.frame.dim();
    let mut s = DMatrix::zeros(d, d);
    for (i, (x, ci)) in datum.frame.blocks().iter().zip(datum.weights.to_f64()).enumerate() {
        let norm = linalg::frobenius_sq(x);
        if norm == 0.0 {
            return Err(FrameError::ZeroBlock(i));
        }
        s += x * x.transpose() * (ci / norm);
    }
    Ok(s)
}

/// Spectral-norm deviation of [`rif_sum`] from the identity.
pub fn rif_residual(datum: &FrameDatum) -> Result<f64> {
    Ok(linalg::identity_deviation(&rif_sum(datum)?))
}

pub fn is_rif(datum: &FrameDatum, tol: f64) -> Result<bool> {
    Ok(rif_residual(datum)? <= tol)
}

/// Source equations `sum c_i sum_a V(a)^T V(a) = I` and sink equations
/// `sum_a V(a) V(a)^T = I`, with `c_i` indexed by sink.
pub fn is_geometric_bl_datum(rep: &BipartiteQuiverRep, weights: &WeightVector, tol: f64) -> Result<bool> {
    if weights.len() != rep.sink_dims.len() {
        return Err(FrameError::DimensionMismatch(format!(
            "{} weights for {} sinks",
            weights.len(),
            rep.sink_dims.len()
        )));
    }
    let c = weights.to_f64();
    let sources_ok = rep.source_sums(|a| c[a.sink]).iter().all(|m| scaled_identity_deviation(m, 1.0) <= tol);
    let sinks_ok = rep.sink_sums().iter().all(|m| scaled_identity_deviation(m, 1.0) <= tol);
    Ok(sources_ok && sinks_ok)
}

/// `sum_{tail a = x} V(a)^T V(a) - sum_{head a = x} V(a) V(a)^T = sigma(x) I`
/// at every vertex. On a bipartite quiver only one of the sums is nonempty.
pub fn is_sigma_critical(rep: &BipartiteQuiverRep, sigma: &StabilityWeight, tol: f64) -> Result<bool> {
    if sigma.source.len() != rep.source_dims.len() || sigma.sink.len() != rep.sink_dims.len() {
        return Err(FrameError::DimensionMismatch("sigma must have one entry per vertex".into()));
    }
    let as_f64 = |v: &BigInt| v.to_f64().unwrap_or(f64::NAN);
    let sources_ok =
        rep.source_sums(|_| 1.0).iter().zip(&sigma.source).all(|(m, s)| scaled_identity_deviation(m, as_f64(s)) <= tol);
    let sinks_ok =
        rep.sink_sums().iter().zip(&sigma.sink).all(|(m, s)| scaled_identity_deviation(&-m, as_f64(s)) <= tol);
    Ok(sources_ok && sinks_ok)
}

/// `W(a) = sqrt(-sigma_c(head a)) V(a) = sqrt(omega c_i) V(a)`.
pub fn scale_to_critical_candidate(rep: &BipartiteQuiverRep, weights: &WeightVector) -> Result<BipartiteQuiverRep> {
    if weights.len() != rep.sink_dims.len() {
        return Err(FrameError::DimensionMismatch(format!(
            "{} weights for {} sinks",
            weights.len(),
            rep.sink_dims.len()
        )));
    }
    let sigma = weights.induced_weight();
    let scales: Vec<f64> =
        sigma.sink.iter().map(|s| rational_to_f64(&BigRational::from_integer(s.abs())).sqrt()).collect();
    let arrows =
        rep.arrows.iter().map(|a| Arrow { source: a.source, sink: a.sink, map: &a.map * scales[a.sink] }).collect();
    Ok(BipartiteQuiverRep { source_dims: rep.source_dims.clone(), sink_dims: rep.sink_dims.clone(), arrows })
}
