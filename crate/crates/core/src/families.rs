//! Generators for the distribution families used in experiments and tests.

use crate::error::{Error, Result};
use crate::lattice::LatticeDist;

/// Apéry's constant `ζ(3)`.
pub const ZETA3: f64 = 1.202_056_903_159_594_3;

/// `Σ_{n≥4} n⁻³`.
pub fn cubic_tail_mass() -> f64 {
    ZETA3 - 1.0 - 1.0 / 8.0 - 1.0 / 27.0
}

pub fn point_mass(at: i64) -> LatticeDist {
    LatticeDist::point(at)
}

/// Mass `p_left` at `left`, the rest at `right`.
pub fn two_point(left: i64, right: i64, p_left: f64) -> Result<LatticeDist> {
    if !(0.0..=1.0).contains(&p_left) {
        return Err(Error::InvalidDistribution(format!("p_left = {p_left} not in [0, 1]")));
    }
    LatticeDist::from_pairs(&[(left, p_left), (right, 1.0 - p_left)])
}

pub fn uniform_window(lo: i64, hi: i64) -> Result<LatticeDist> {
    LatticeDist::uniform(lo, hi)
}

/// Heavy-tailed example: `μ(-2) = μ(-1) = (1 - c)/2`, `μ(n) = n⁻³` for
/// `4 ≤ n ≤ cutoff`, with `c = Σ_{n≥4} n⁻³`. The tail beyond the cutoff is
/// reported as truncated mass.
pub fn cubic_tail_example(cutoff: i64) -> Result<LatticeDist> {
    if cutoff < 4 {
        return Err(Error::InvalidDistribution(format!("cutoff {cutoff} < 4")));
    }
    let c = cubic_tail_mass();
    let neg = 0.5 * (1.0 - c);
    let mut weights = vec![neg, neg, 0.0, 0.0, 0.0, 0.0];
    let mut kept = 0.0;
    for n in 4..=cutoff {
        let w = (n as f64).powi(-3);
        kept += w;
        weights.push(w);
    }
    LatticeDist::new(-2, weights)?.with_truncated_mass((c - kept).max(0.0))
}

/// Geometric mixture on `ℤ₊`, `μ(k) = Σ wᵢ cᵢᵏ` for `0 ≤ k ≤ cutoff`, joined
/// with the given masses on the negative sites.
pub fn geometric_mixture(atoms: &[(f64, f64)], negative: &[(i64, f64)], cutoff: i64) -> Result<LatticeDist> {
    if let Some(&(c, w)) = atoms.iter().find(|&&(c, w)| !(0.0..1.0).contains(&c) || c <= 0.0 || w < 0.0) {
        return Err(Error::InvalidDistribution(format!("atom ({c}, {w}) outside (0,1) x [0,inf)")));
    }
    if let Some(&(k, _)) = negative.iter().find(|p| p.0 >= 0) {
        return Err(Error::InvalidDistribution(format!("negative part has site {k} >= 0")));
    }
    let mut pairs: Vec<(i64, f64)> = negative.to_vec();
    for k in 0..=cutoff {
        pairs.push((k, atoms.iter().map(|&(c, w)| w * c.powi(k as i32)).sum()));
    }
    let lost: f64 = atoms
        .iter()
        .map(|&(c, w)| w * c.powi((cutoff + 1) as i32) / (1.0 - c))
        .sum();
    LatticeDist::from_pairs(&pairs)?.with_truncated_mass(lost)
}

/// Total mass of the positive geometric part, `Σ wᵢ / (1 - cᵢ)`.
pub fn geometric_mixture_mass(atoms: &[(f64, f64)]) -> f64 {
    atoms.iter().map(|&(c, w)| w / (1.0 - c)).sum()
}
