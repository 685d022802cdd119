//! Seeded random frames: Gaussian, equal-norm Parseval, nearly equal-norm
//! Parseval, and rank-degenerate.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;
use crate::linalg;
use crate::quiver::nearness;
use crate::weights::WeightVector;

/// Blocks of shape `d x widths[i]` with i.i.d. standard normal entries.
pub fn gaussian_frame<R: Rng>(rng: &mut R, dim: usize, widths: &[usize]) -> Result<MatrixFrame> {
    let blocks =
        widths.iter().map(|&w| DMatrix::from_fn(dim, w, |_, _| rng.sample::<f64, _>(StandardNormal))).collect();
    MatrixFrame::new(blocks)
}

fn whiten(frame: &MatrixFrame) -> Result<MatrixFrame> {
    let a = linalg::inv_sqrt_spd(&frame.frame_operator())?;
    frame.transform(&a)
}

fn equalize_norms(frame: &MatrixFrame) -> Result<MatrixFrame> {
    let target = (frame.dim() as f64 / frame.len() as f64).sqrt();
    let scales: Vec<f64> = frame.block_norms_sq().iter().map(|v| target / v.sqrt()).collect();
    frame.scale_blocks(&scales)
}

/// Alternate between whitening the frame operator and equalizing block
/// norms until both hold to `tol`.
pub fn project_to_equal_norm_pmf(frame: &MatrixFrame, tol: f64, max_rounds: usize) -> Result<MatrixFrame> {
    let mut x = frame.clone();
    for _ in 0..max_rounds {
        x = equalize_norms(&whiten(&x)?)?;
        if nearness(&x).epsilon <= tol {
            return Ok(x);
        }
    }
    Err(FrameError::NotConverged(format!("alternating projection stalled above {tol:e}")))
}

/// Random equal-norm Parseval frame with the given block widths
/// (needs `n > d`).
pub fn equal_norm_pmf<R: Rng>(rng: &mut R, dim: usize, widths: &[usize]) -> Result<MatrixFrame> {
    let mut last = None;
    for _ in 0..16 {
        let g = gaussian_frame(rng, dim, widths)?;
        match project_to_equal_norm_pmf(&g, 1e-13, 20_000) {
            Ok(f) => return Ok(f),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| FrameError::NotConverged("no draw converged".into())))
}

/// Perturb `base` along one Gaussian direction, bisecting on the noise scale
/// so that the measured nearness is close to `target`. Returns the frame and
/// its measured nearness.
pub fn near_pmf<R: Rng>(rng: &mut R, base: &MatrixFrame, target: f64) -> Result<(MatrixFrame, f64)> {
    if !(target > 0.0) {
        return Err(FrameError::Domain("target nearness must be positive".into()));
    }
    let direction = gaussian_frame(rng, base.dim(), &base.widths())?;
    let at = |s: f64| -> Result<(MatrixFrame, f64)> {
        let blocks = base.blocks().iter().zip(direction.blocks()).map(|(x, h)| x + h * s).collect();
        let f = MatrixFrame::new(blocks)?;
        let eps = nearness(&f).epsilon;
        Ok((f, eps))
    };
    let (mut lo, mut hi) = (0.0, target);
    while at(hi)?.1 < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(FrameError::Domain("noise scale bracket not found".into()));
        }
    }
    let mut best = at(lo)?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let cand = at(mid)?;
        if cand.1 < target {
            lo = mid;
            best = cand;
        } else {
            hi = mid;
        }
        if (best.1 - target).abs() <= 1e-3 * target {
            break;
        }
    }
    Ok(best)
}

/// A frame whose first `low` blocks have all their columns in a random
/// subspace of dimension `rank < d`; the remaining blocks are Gaussian.
pub fn degenerate_frame<R: Rng>(
    rng: &mut R,
    dim: usize,
    widths: &[usize],
    low: usize,
    rank: usize,
) -> Result<MatrixFrame> {
    if rank == 0 || rank >= dim || low > widths.len() {
        return Err(FrameError::Domain(format!("need 0 < rank < d and low <= n (rank {rank}, low {low})")));
    }
    let basis = DMatrix::from_fn(dim, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let blocks = widths
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            if i < low {
                let coeffs = DMatrix::from_fn(rank, w, |_, _| rng.sample::<f64, _>(StandardNormal));
                &basis * coeffs
            } else {
                DMatrix::from_fn(dim, w, |_, _| rng.sample::<f64, _>(StandardNormal))
            }
        })
        .collect();
    MatrixFrame::new(blocks)
}

/// Random positive rational weights summing to `d`: `c_i = d k_i / sum k`
/// with `k_i` drawn from `1..=max_k`.
pub fn random_weights<R: Rng>(rng: &mut R, dim: usize, n: usize, max_k: i64) -> Result<WeightVector> {
    let k: Vec<i64> = (0..n).map(|_| rng.random_range(1..=max_k.max(1))).collect();
    let total: i64 = k.iter().sum();
    let pairs: Vec<(i64, i64)> = k.iter().map(|&ki| (dim as i64 * ki, total)).collect();
    WeightVector::from_ratios(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quiver::is_equal_norm_pmf;
    use crate::weights::FrameDatum;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equal_norm_pmfs_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for widths in [vec![1, 1, 1, 1], vec![2, 1, 2, 1, 1], vec![1, 2, 1, 1, 2, 2, 1]] {
            let f = equal_norm_pmf(&mut rng, 3, &widths).unwrap();
            assert!(is_equal_norm_pmf(&f, 1e-12));
            assert_eq!(f.widths(), widths);
        }
    }

    #[test]
    fn near_pmf_hits_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = equal_norm_pmf(&mut rng, 2, &[1, 2, 1, 1]).unwrap();
        for target in [1e-3, 0.05, 0.29] {
            let (f, eps) = near_pmf(&mut rng, &base, target).unwrap();
            assert_eq!(eps, nearness(&f).epsilon);
            assert!(eps < target && eps > 0.99 * target, "{eps} vs {target}");
        }
    }

    #[test]
    fn degenerate_blocks_share_a_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = degenerate_frame(&mut rng, 3, &[2, 1, 1, 2], 2, 1).unwrap();
        assert_eq!(f.column_span_dim(&[0, 1], 1e-9), 1);
        assert_eq!(f.column_span_dim(&[0, 1, 2, 3], 1e-9), 3);
        assert!(degenerate_frame(&mut rng, 3, &[1, 1], 1, 3).is_err());
    }

    #[test]
    fn weights_sum_to_dim() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = gaussian_frame(&mut rng, 3, &[1, 1, 2, 1]).unwrap();
        for _ in 0..20 {
            let w = random_weights(&mut rng, 3, 4, 5).unwrap();
            assert!(FrameDatum::new(f.clone(), w).unwrap().sums_to_dim());
        }
    }

    #[test]
    fn seeded_draws_repeat() {
        let a = gaussian_frame(&mut ChaCha8Rng::seed_from_u64(9), 2, &[1, 2]).unwrap();
        let b = gaussian_frame(&mut ChaCha8Rng::seed_from_u64(9), 2, &[1, 2]).unwrap();
        assert_eq!(a, b);
    }
}
