//! The triangular system for laws with a gap above zero.
//!
//! Under `μ(n) = 0` for `0 ≤ n < a+b`, `μ(n) > 0` for `n ≥ a+b` and
//! `μ*²(n) = 0` for `0 ≤ n ≤ a`, no mass sits at or below `-b`, and for
//! `ℓ = 1..b-1`
//! `μ*²(a+ℓ) = 2 Σ_{m=0}^{ℓ-1} μ(ℓ-b-m) μ(a+b+m)`,
//! the factor 2 counting both orders of each negative/positive pair,
//! which is solved for `μ(-b+1), ..., μ(-1)` in that order.

use super::{assemble, checked_deficit, forward_residual, DetectedClass, ReconstructionReport};
use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::lattice::EPS_MASS;

/// Masses at or below this count as zero in the support pattern checks.
const ZERO_TOL: f64 = 1e-13;

/// Reads `(a, b)` off the data: `a + b` is the first site of `r₁` and `a`
/// the last site before `r₂` becomes positive, capped so that `b ≥ 1`.
pub fn infer_triangular_shape(data: &TruncatedData) -> Result<(i64, i64)> {
    if data.horizon() < 2 {
        return Err(Error::NotDetected("triangular detection needs two powers".into()));
    }
    let r1 = data.restricted(1);
    let r2 = data.restricted(2);
    let first = r1
        .iter()
        .find(|&(_, w)| w > ZERO_TOL)
        .map(|(k, _)| k)
        .ok_or_else(|| Error::NotDetected("restricted(1) is empty".into()))?;
    let first2 = r2
        .iter()
        .find(|&(_, w)| w > ZERO_TOL)
        .map(|(k, _)| k)
        .unwrap_or(i64::MAX);
    let a = first2.saturating_sub(1).min(first - 1);
    let b = first - a;
    if a < 1 || b < 1 {
        return Err(Error::NotDetected(format!(
            "no gap pattern: restricted(1) starts at {first}, restricted(2) at {first2}"
        )));
    }
    Ok((a, b))
}

pub fn recover_triangular(data: &TruncatedData, a: i64, b: i64) -> Result<ReconstructionReport> {
    if a < 1 || b < 1 {
        return Err(Error::NotDetected(format!("need a, b >= 1, got a = {a}, b = {b}")));
    }
    if data.horizon() < 2 {
        return Err(Error::NotDetected("triangular recovery needs two powers".into()));
    }
    let r1 = data.restricted(1);
    let r2 = data.restricted(2);
    let top = r1.max_support().unwrap_or(-1);
    if (0..a + b).any(|n| r1.mass(n) > ZERO_TOL) {
        return Err(Error::NotDetected(format!("restricted(1) has mass below a+b = {}", a + b)));
    }
    if top < a + b || (a + b..=top).any(|n| r1.mass(n) <= 0.0) {
        return Err(Error::NotDetected(format!(
            "restricted(1) is not positive on [{}, {top}]",
            a + b
        )));
    }
    if (0..=a).any(|n| r2.mass(n) > ZERO_TOL) {
        return Err(Error::NotDetected(format!("restricted(2) has mass in [0, {a}]")));
    }

    let lead = r1.mass(a + b);
    // neg[j-1] = μ(-j).
    let mut neg = vec![0.0; (b - 1) as usize];
    for l in 1..b {
        let mut rhs = 0.5 * r2.mass(a + l);
        for m in 1..l {
            rhs -= neg[(b - l + m - 1) as usize] * r1.mass(a + b + m);
        }
        let value = rhs / lead;
        if value < -EPS_MASS {
            return Err(Error::DataInconsistency(format!(
                "solved mass at {} is negative ({value:e})",
                l - b
            )));
        }
        neg[(b - l - 1) as usize] = value.max(0.0);
    }
    let deficit = checked_deficit(data)?;
    let solved: f64 = neg.iter().sum();
    let leftover = deficit - solved;
    let mut report = ReconstructionReport::new(DetectedClass::Triangular, None)
        .residual("a", a as f64)
        .residual("b", b as f64)
        .residual("leftover_mass", leftover);
    if leftover.abs() > EPS_MASS {
        report.detected_class = DetectedClass::None;
        report.verdicts.insert(
            "reason".into(),
            format!("solved window [{}, -1] leaves mass {leftover:e} unexplained", 1 - b),
        );
        report.verdicts.insert("determined_window".into(), format!("[{}, -1]", 1 - b));
        for (j, w) in neg.iter().enumerate() {
            report.residuals.insert(format!("mass_at_-{}", j + 1), *w);
        }
        return Ok(report);
    }
    let recovered = assemble(data, &neg)?;
    let fwd = forward_residual(&recovered, data, data.horizon().min(4))?;
    report.recovered = Some(recovered);
    Ok(report.residual("forward_residual", fwd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::cubic_tail_example;
    use crate::lattice::LatticeDist;

    #[test]
    fn cubic_tail_example_recovers() {
        let mu = cubic_tail_example(200).unwrap();
        let data = TruncatedData::from_distribution(&mu, 4).unwrap();
        assert_eq!(infer_triangular_shape(&data).unwrap(), (1, 3));
        let report = recover_triangular(&data, 1, 3).unwrap().with_truth(&mu);
        let rec = report.recovered.as_ref().unwrap();
        assert!((rec.mass(-2) - mu.mass(-2)).abs() < 1e-8);
        assert!((rec.mass(-1) - mu.mass(-1)).abs() < 1e-8);
    }

    #[test]
    fn synthetic_two_two() {
        let mu = LatticeDist::from_pairs(&[(-1, 0.1), (4, 0.5), (5, 0.4)]).unwrap();
        let data = TruncatedData::from_distribution(&mu, 3).unwrap();
        let report = recover_triangular(&data, 2, 2).unwrap().with_truth(&mu);
        assert!(report.tv_distance().unwrap() < 1e-15);
    }

    #[test]
    fn unit_step_fails_precondition() {
        let data = TruncatedData::from_distribution(&LatticeDist::point(1), 3).unwrap();
        assert!(matches!(recover_triangular(&data, 0, 1), Err(Error::NotDetected(_))));
        assert!(infer_triangular_shape(&data).is_err());
    }
}
