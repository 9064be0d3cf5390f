//! Finite-window sub-probability distributions on the integer lattice.
//!
//! A [`LatticeDist`] stores masses on a contiguous window `offset..offset+len`.
//! Windows are kept canonical: edge weights at or below [`EPS_TRIM`] are
//! trimmed, so the first and last stored weights are nonzero unless the
//! measure is zero.

pub mod exact;
mod fft;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|total - 1|` for a distribution to count as proper.
pub const EPS_MASS: f64 = 1e-9;
/// Edge weights at or below this are trimmed from the window.
pub const EPS_TRIM: f64 = 1e-15;
/// Output length below which convolution is always done by direct summation.
pub const FFT_THRESHOLD: usize = 64;
/// Operands at most this long are convolved directly whatever the output length.
pub const DIRECT_SHORT_OPERAND: usize = 16;
/// Default cap on window length.
pub const MAX_WINDOW: usize = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeDist {
    offset: i64,
    weights: Vec<f64>,
    total: f64,
    truncated_mass: f64,
}

/// On-disk representation: `{ "offset": int, "weights": [..], "truncated_mass": float }`.
#[derive(Serialize, Deserialize)]
struct DistFile {
    offset: i64,
    weights: Vec<f64>,
    #[serde(default)]
    truncated_mass: f64,
}

impl Serialize for LatticeDist {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DistFile {
            offset: self.offset,
            weights: self.weights.clone(),
            truncated_mass: self.truncated_mass,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LatticeDist {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DistFile::deserialize(deserializer)?;
        let dist = LatticeDist::new(raw.offset, raw.weights).map_err(serde::de::Error::custom)?;
        dist.with_truncated_mass(raw.truncated_mass)
            .map_err(serde::de::Error::custom)
    }
}

impl LatticeDist {
    /// Builds a canonical distribution. Rejects negative or non-finite
    /// weights and totals above `1 + EPS_MASS`.
    pub fn new(offset: i64, weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {w} is negative or not finite")));
        }
        let dist = Self::from_raw(offset, weights);
        if dist.total > 1.0 + EPS_MASS {
            return Err(Error::InvalidDistribution(format!(
                "total mass {} exceeds 1",
                dist.total
            )));
        }
        Ok(dist)
    }

    /// Canonicalises without validation; negative round-off is clamped to zero.
    pub(crate) fn from_raw(offset: i64, mut weights: Vec<f64>) -> Self {
        for w in weights.iter_mut() {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let first = weights.iter().position(|&w| w > EPS_TRIM);
        let Some(first) = first else {
            return Self::zero();
        };
        let last = weights.iter().rposition(|&w| w > EPS_TRIM).unwrap();
        weights.truncate(last + 1);
        weights.drain(..first);
        let total = weights.iter().sum();
        Self {
            offset: offset + first as i64,
            weights,
            total,
            truncated_mass: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            offset: 0,
            weights: Vec::new(),
            total: 0.0,
            truncated_mass: 0.0,
        }
    }

    /// Unit mass at `k`.
    pub fn point(k: i64) -> Self {
        Self {
            offset: k,
            weights: vec![1.0],
            total: 1.0,
            truncated_mass: 0.0,
        }
    }

    /// Builds from `(site, mass)` pairs; repeated sites accumulate.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Ok(Self::zero());
        }
        let lo = pairs.iter().map(|p| p.0).min().unwrap();
        let hi = pairs.iter().map(|p| p.0).max().unwrap();
        let mut weights = vec![0.0; (hi - lo + 1) as usize];
        for &(k, w) in pairs {
            weights[(k - lo) as usize] += w;
        }
        Self::new(lo, weights)
    }

    /// Uniform law on the integers `lo..=hi`.
    pub fn uniform(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return Err(Error::InvalidDistribution(format!("empty window {lo}..={hi}")));
        }
        let n = (hi - lo + 1) as usize;
        Self::new(lo, vec![1.0 / n as f64; n])
    }

    /// Records mass lost to truncation of an infinite-support law.
    pub fn with_truncated_mass(mut self, truncated_mass: f64) -> Result<Self> {
        if !truncated_mass.is_finite() || truncated_mass < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "truncated mass {truncated_mass} must be a nonnegative number"
            )));
        }
        self.truncated_mass = truncated_mass;
        Ok(self)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn min_support(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.offset)
    }

    pub fn max_support(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.offset + self.weights.len() as i64 - 1)
    }

    /// Mass at site `k` (zero outside the window).
    pub fn mass(&self, k: i64) -> f64 {
        let i = k - self.offset;
        if i < 0 || i >= self.weights.len() as i64 {
            0.0
        } else {
            self.weights[i as usize]
        }
    }

    /// `(site, mass)` pairs over the window, zeros included.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (self.offset + i as i64, w))
    }

    /// Proper within `EPS_MASS`, counting mass declared lost to truncation.
    pub fn is_proper(&self) -> bool {
        (self.total + self.truncated_mass - 1.0).abs() <= EPS_MASS
    }

    pub fn first_moment(&self) -> f64 {
        self.iter().map(|(k, w)| k as f64 * w).sum()
    }

    /// Mass on sites `>= k`.
    pub fn mass_at_or_above(&self, k: i64) -> f64 {
        self.iter().filter(|&(j, _)| j >= k).map(|(_, w)| w).sum()
    }

    /// Total-variation distance `½ Σ |p(k) - q(k)|`.
    pub fn tv_distance(&self, other: &LatticeDist) -> f64 {
        let lo = match (self.min_support(), other.min_support()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return 0.0,
        };
        let hi = self
            .max_support()
            .unwrap_or(i64::MIN)
            .max(other.max_support().unwrap_or(i64::MIN));
        0.5 * (lo..=hi)
            .map(|k| (self.mass(k) - other.mass(k)).abs())
            .sum::<f64>()
    }

    /// Sup-norm distance between mass functions.
    pub fn sup_distance(&self, other: &LatticeDist) -> f64 {
        let lo = self
            .min_support()
            .unwrap_or(i64::MAX)
            .min(other.min_support().unwrap_or(i64::MAX));
        let hi = self
            .max_support()
            .unwrap_or(i64::MIN)
            .max(other.max_support().unwrap_or(i64::MIN));
        if lo > hi {
            return 0.0;
        }
        (lo..=hi)
            .map(|k| (self.mass(k) - other.mass(k)).abs())
            .fold(0.0, f64::max)
    }

    /// Translate the support by `by` sites.
    pub fn shift(&self, by: i64) -> LatticeDist {
        let mut out = self.clone();
        if !out.is_zero() {
            out.offset += by;
        }
        out
    }

    /// Sum of two measures (no renormalisation).
    pub fn add(&self, other: &LatticeDist) -> Result<LatticeDist> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let lo = self.offset.min(other.offset);
        let hi = self.max_support().unwrap().max(other.max_support().unwrap());
        let weights = (lo..=hi).map(|k| self.mass(k) + other.mass(k)).collect();
        let out = LatticeDist::new(lo, weights)?;
        out.with_truncated_mass(self.truncated_mass + other.truncated_mass)
    }

    /// Restriction to the sites `lo..=hi`.
    pub fn restrict_to(&self, lo: i64, hi: i64) -> LatticeDist {
        if self.is_zero() || hi < lo {
            return LatticeDist::zero();
        }
        let lo = lo.max(self.offset);
        let hi = hi.min(self.max_support().unwrap());
        if hi < lo {
            return LatticeDist::zero();
        }
        let weights = (lo..=hi).map(|k| self.mass(k)).collect();
        let mut out = LatticeDist::from_raw(lo, weights);
        out.truncated_mass = self.truncated_mass;
        out
    }

    /// Dense weights on `lo..=hi`, zero-padded.
    pub fn dense(&self, lo: i64, hi: i64) -> Vec<f64> {
        (lo..=hi).map(|k| self.mass(k)).collect()
    }
}

/// Convolution with the default window cap.
pub fn convolve(a: &LatticeDist, b: &LatticeDist) -> Result<LatticeDist> {
    convolve_with_limit(a, b, MAX_WINDOW)
}

pub fn convolve_with_limit(a: &LatticeDist, b: &LatticeDist, max_window: usize) -> Result<LatticeDist> {
    let truncated = (a.total + a.truncated_mass) * (b.total + b.truncated_mass) - a.total * b.total;
    if a.is_zero() || b.is_zero() {
        let mut z = LatticeDist::zero();
        z.truncated_mass = truncated.max(0.0);
        return Ok(z);
    }
    let len = a.len() + b.len() - 1;
    if len > max_window {
        return Err(Error::SizeLimit { len, max: max_window });
    }
    let weights = if len < FFT_THRESHOLD || a.len().min(b.len()) <= DIRECT_SHORT_OPERAND {
        direct_convolution(&a.weights, &b.weights)
    } else {
        fft::convolve(&a.weights, &b.weights)
    };
    let mut out = LatticeDist::from_raw(a.offset + b.offset, weights);
    out.truncated_mass = truncated.max(0.0);
    Ok(out)
}

/// Direct summation, always; used as the oracle for the FFT path.
pub fn convolve_direct(a: &LatticeDist, b: &LatticeDist) -> LatticeDist {
    if a.is_zero() || b.is_zero() {
        return LatticeDist::zero();
    }
    LatticeDist::from_raw(a.offset + b.offset, direct_convolution(&a.weights, &b.weights))
}

/// FFT path, always.
pub fn convolve_fft(a: &LatticeDist, b: &LatticeDist) -> LatticeDist {
    if a.is_zero() || b.is_zero() {
        return LatticeDist::zero();
    }
    LatticeDist::from_raw(a.offset + b.offset, fft::convolve(&a.weights, &b.weights))
}

pub(crate) fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    for (j, &s) in short.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for (o, &l) in out[j..j + long.len()].iter_mut().zip(long) {
            *o += s * l;
        }
    }
    out
}

/// `μ*ⁿ` by binary exponentiation; `μ*⁰ = δ₀`.
pub fn convolution_power(mu: &LatticeDist, n: u32) -> Result<LatticeDist> {
    let mut result = LatticeDist::point(0);
    let mut base = mu.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = convolve(&result, &base)?;
        }
        e >>= 1;
        if e > 0 {
            base = convolve(&base, &base)?;
        }
    }
    Ok(result)
}

/// Zeroes the masses on negative sites.
pub fn restrict_nonneg(mu: &LatticeDist) -> LatticeDist {
    match mu.max_support() {
        Some(hi) if hi >= 0 => mu.restrict_to(0, hi),
        _ => {
            let mut z = LatticeDist::zero();
            z.truncated_mass = mu.truncated_mass;
            z
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Characteristic,
    Mgf,
    Generating,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformPoint {
    pub kind: TransformKind,
    pub argument: f64,
    pub value: Complex64,
}

/// Exact finite sum `Σ μ(k) wᵏ` with `w = e^{it}`, `e^{λ}` or `s`.
pub fn eval_transform(mu: &LatticeDist, kind: TransformKind, argument: f64) -> TransformPoint {
    let value = match kind {
        TransformKind::Characteristic => mu
            .iter()
            .map(|(k, w)| Complex64::from_polar(w, argument * k as f64))
            .sum(),
        TransformKind::Mgf => Complex64::new(
            mu.iter().map(|(k, w)| w * (argument * k as f64).exp()).sum(),
            0.0,
        ),
        TransformKind::Generating => Complex64::new(
            mu.iter().map(|(k, w)| w * argument.powi(k as i32)).sum(),
            0.0,
        ),
    };
    TransformPoint {
        kind,
        argument,
        value,
    }
}

/// `Σ_{k≤0} μ(n-k) μ(k)` through the half-line identity
/// `½ (μ*²(n) - Σ_{k=1}^{n-1} μ(n-k) μ(k))`.
pub fn cross_correlation_lhs(mu: &LatticeDist, n: i64) -> Result<f64> {
    let square = convolve(mu, mu)?;
    Ok(cross_correlation_from_square(mu, &square, n))
}

pub(crate) fn cross_correlation_from_square(mu: &LatticeDist, square: &LatticeDist, n: i64) -> f64 {
    let partial: f64 = (1..n).map(|k| mu.mass(n - k) * mu.mass(k)).sum();
    0.5 * (square.mass(n) - partial)
}

/// Direct two-sided sum `Σ_{k≤0} μ(n-k) μ(k)`.
pub fn cross_correlation_lhs_direct(mu: &LatticeDist, n: i64) -> f64 {
    mu.iter()
        .filter(|&(k, _)| k <= 0)
        .map(|(k, w)| w * mu.mass(n - k))
        .sum()
}
