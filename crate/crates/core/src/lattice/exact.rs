//! Exact rational convolution, for use as a test oracle.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

/// A mass function with rational weights on `offset..offset+len`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalDist {
    pub offset: i64,
    pub weights: Vec<BigRational>,
}

impl RationalDist {
    /// Weights given as `(numerator, denominator)` pairs.
    pub fn from_fractions(offset: i64, fractions: &[(i64, i64)]) -> Self {
        let weights = fractions
            .iter()
            .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
            .collect();
        Self { offset, weights }
    }

    pub fn mass(&self, k: i64) -> BigRational {
        let i = k - self.offset;
        if i < 0 || i >= self.weights.len() as i64 {
            BigRational::zero()
        } else {
            self.weights[i as usize].clone()
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Direct-summation convolution in exact arithmetic.
pub fn convolve_exact(a: &RationalDist, b: &RationalDist) -> RationalDist {
    if a.weights.is_empty() || b.weights.is_empty() {
        return RationalDist {
            offset: 0,
            weights: Vec::new(),
        };
    }
    let mut weights = vec![BigRational::zero(); a.weights.len() + b.weights.len() - 1];
    for (i, x) in a.weights.iter().enumerate() {
        for (j, y) in b.weights.iter().enumerate() {
            weights[i + j] += x * y;
        }
    }
    RationalDist {
        offset: a.offset + b.offset,
        weights,
    }
}
