//! Positive rational weights and weighted frames.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{FrameError, Result};
use crate::frame::MatrixFrame;

/// Weights `c_1, ..., c_n`, all positive rationals held exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    weights: Vec<BigRational>,
}

/// Integer stability weight on a bipartite quiver: one entry per source
/// vertex followed by one per sink vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityWeight {
    pub source: Vec<BigInt>,
    pub sink: Vec<BigInt>,
}

impl WeightVector {
    pub fn new(weights: Vec<BigRational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(FrameError::InvalidWeights("weight vector is empty".into()));
        }
        if let Some(i) = weights.iter().position(|c| !c.is_positive()) {
            return Err(FrameError::InvalidWeights(format!("weight {i} is not positive")));
        }
        Ok(Self { weights })
    }

    /// From `(numerator, denominator)` pairs.
    pub fn from_ratios(pairs: &[(i64, i64)]) -> Result<Self> {
        let weights = pairs
            .iter()
            .enumerate()
            .map(|(i, &(num, den))| {
                if den == 0 {
                    return Err(FrameError::InvalidWeights(format!("weight {i} has zero denominator")));
                }
                Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights)
    }

    /// `(d/n, ..., d/n)`.
    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(FrameError::InvalidWeights("weight vector is empty".into()));
        }
        let c = BigRational::new(BigInt::from(dim), BigInt::from(n));
        Self::new(vec![c; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize) -> &BigRational {
        &self.weights[i]
    }

    pub fn as_slice(&self) -> &[BigRational] {
        &self.weights
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights.iter().map(rational_to_f64).collect()
    }

    pub fn sum(&self) -> BigRational {
        self.weights.iter().fold(BigRational::zero(), |acc, c| acc + c)
    }

    /// Exact sum over a subset of indices.
    pub fn subset_sum(&self, subset: &[usize]) -> BigRational {
        subset.iter().fold(BigRational::zero(), |acc, &i| acc + &self.weights[i])
    }

    /// Least common denominator `omega`.
    pub fn omega(&self) -> BigInt {
        self.weights.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Induced weight of the frame quiver: `sigma(0) = omega`,
    /// `sigma(i) = -omega * c_i`.
    pub fn induced_weight(&self) -> StabilityWeight {
        self.induced_weight_with_sources(1)
    }

    /// Induced weight on a bipartite quiver with `sources` source vertices.
    pub fn induced_weight_with_sources(&self, sources: usize) -> StabilityWeight {
        let omega = self.omega();
        let sink = self
            .weights
            .iter()
            .map(|c| {
                let scaled = c * BigRational::from_integer(omega.clone());
                debug_assert!(scaled.is_integer());
                -scaled.to_integer()
            })
            .collect();
        StabilityWeight { source: vec![omega; sources], sink }
    }

    /// Weights of the column split: block `i` contributes `d_i` copies of
    /// `c_i / d_i`.
    pub fn column_split(&self, widths: &[usize]) -> Result<WeightVector> {
        if widths.len() != self.len() {
            return Err(FrameError::DimensionMismatch(format!("{} widths for {} weights", widths.len(), self.len())));
        }
        let mut out = Vec::new();
        for (c, &w) in self.weights.iter().zip(widths) {
            let share = c / BigRational::from_integer(BigInt::from(w));
            out.extend(std::iter::repeat_n(share, w));
        }
        WeightVector::new(out)
    }

    /// `sum_i c_i log c_i`.
    pub fn entropy_term(&self) -> f64 {
        self.to_f64().iter().map(|c| c * c.ln()).sum()
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A frame together with one weight per block.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDatum {
    pub frame: MatrixFrame,
    pub weights: WeightVector,
}

impl FrameDatum {
    pub fn new(frame: MatrixFrame, weights: WeightVector) -> Result<Self> {
        if frame.len() != weights.len() {
            return Err(FrameError::DimensionMismatch(format!("{} blocks but {} weights", frame.len(), weights.len())));
        }
        Ok(Self { frame, weights })
    }

    /// Frame weighted by `(d/n, ..., d/n)`.
    pub fn uniform(frame: MatrixFrame) -> Result<Self> {
        let weights = WeightVector::uniform(frame.dim(), frame.len())?;
        Self::new(frame, weights)
    }

    /// `sum c_i == d`, exactly.
    pub fn sums_to_dim(&self) -> bool {
        self.weights.sum() == BigRational::from_integer(BigInt::from(self.frame.dim()))
    }

    pub fn check_sum(&self) -> Result<()> {
        if self.sums_to_dim() {
            Ok(())
        } else {
            Err(FrameError::WeightSum { sum: self.weights.sum().to_string(), dim: self.frame.dim() })
        }
    }

    /// Column-level datum: every column becomes a block with weight `c_i / d_i`.
    pub fn column_split(&self) -> Result<FrameDatum> {
        let weights = self.weights.column_split(&self.frame.widths())?;
        FrameDatum::new(self.frame.column_split(), weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_and_induced_weight() {
        let w = WeightVector::from_ratios(&[(2, 3), (1, 2), (5, 6)]).unwrap();
        assert_eq!(w.omega(), BigInt::from(6));
        let sigma = w.induced_weight();
        assert_eq!(sigma.source, vec![BigInt::from(6)]);
        assert_eq!(sigma.sink, vec![BigInt::from(-4), BigInt::from(-3), BigInt::from(-5)]);
    }

    #[test]
    fn omega_is_exact_for_large_denominators() {
        let w = WeightVector::from_ratios(&[(1, 1_000_000_007), (1, 998_244_353)]).unwrap();
        assert_eq!(w.omega(), BigInt::from(1_000_000_007i64) * BigInt::from(998_244_353i64));
        assert_eq!(w.induced_weight().sink[0], -BigInt::from(998_244_353i64));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(WeightVector::from_ratios(&[(0, 1)]).is_err());
        assert!(WeightVector::from_ratios(&[(1, 0)]).is_err());
        assert!(WeightVector::from_ratios(&[(-1, 2)]).is_err());
        assert!(WeightVector::new(vec![]).is_err());
    }

    #[test]
    fn uniform_sums_to_dim() {
        let w = WeightVector::uniform(3, 7).unwrap();
        assert_eq!(w.sum(), BigRational::from_integer(BigInt::from(3)));
        assert_eq!(w.omega(), BigInt::from(7));
    }

    #[test]
    fn column_split_weights() {
        let w = WeightVector::uniform(2, 3).unwrap().column_split(&[2, 1, 1]).unwrap();
        assert_eq!(w, WeightVector::from_ratios(&[(1, 3), (1, 3), (2, 3), (2, 3)]).unwrap());
    }
}
