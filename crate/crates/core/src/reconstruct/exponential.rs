//! Recovery through transform values estimated by the ratio statistic.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{assemble, checked_deficit, forward_residual, DetectedClass, ReconstructionReport, W_MAX};
use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::factor::{exp_moment_conditions, neg_prob_sequence};
use crate::lattice::{eval_transform, TransformKind};
use crate::lsq::{solve_simplex_lsq, spectrum};

#[derive(Clone, Debug)]
pub struct ExponentialOptions {
    /// Characteristic points `t_j = j·π/char_points`, `j = 1..=char_points`.
    pub char_points: usize,
    /// λ grid for condition (b).
    pub lambdas: Vec<f64>,
    pub w_max: usize,
    /// Relative fit residual accepted for a window.
    pub fit_tol: f64,
    /// Condition number above which the fit is refused.
    pub max_condition: f64,
}

impl Default for ExponentialOptions {
    fn default() -> Self {
        Self {
            char_points: 64,
            lambdas: (1..=30).map(|j| 0.1 * j as f64).collect(),
            w_max: W_MAX,
            fit_tol: 1e-8,
            max_condition: 1e14,
        }
    }
}

/// A recovered transform value `φ(point)`.
#[derive(Clone, Copy, Debug)]
enum Point {
    Char { t: f64, phi: Complex64 },
    Mgf { lambda: f64, phi: f64 },
}

/// Lowest `|aₙ(t)|` used for a characteristic point.
const CHAR_MIN_MODULUS: f64 = 1e-6;
/// Largest `P(Sₙ < 0) / |aₙ(t)|` tolerated for a characteristic point.
const CHAR_REL_ERROR: f64 = 1e-10;
/// Relative change between consecutive ratios accepted as stable.
const CHAR_STABLE: f64 = 1e-9;

fn char_points(data: &TruncatedData, options: &ExponentialOptions) -> Vec<Point> {
    let neg = neg_prob_sequence(data).values;
    let scale = 1.0 / data.refinement() as f64;
    let mut out = Vec::new();
    for j in 1..=options.char_points {
        let t = j as f64 * PI / options.char_points as f64;
        let a: Vec<Complex64> = data
            .iter()
            .map(|r| eval_transform(r, TransformKind::Characteristic, t * scale).value)
            .collect();
        let usable = |n: usize| a[n].norm() >= CHAR_MIN_MODULUS && neg[n] <= CHAR_REL_ERROR * a[n].norm();
        let Some(n) = (1..a.len().saturating_sub(1))
            .rev()
            .find(|&n| usable(n) && usable(n + 1) && usable(n - 1))
        else {
            continue;
        };
        let r_now = a[n + 1] / a[n];
        let r_prev = a[n] / a[n - 1];
        if (r_now - r_prev).norm() <= CHAR_STABLE * r_now.norm() {
            out.push(Point::Char { t, phi: r_now });
        }
    }
    out
}

/// Recovers `μ` on the negative half-line from transform values.
///
/// Characteristic points come from condition (0236) (a valid decay rate of
/// `P(Sₙ < 0)`), mgf points from condition (b). Both are fitted jointly by
/// least squares on the simplex `μ(-j) ≥ 0, Σ μ(-j) = deficit`, over windows
/// `W = 1, 2, ...`; the first window with a small enough residual wins.
pub fn recover_exponential(data: &TruncatedData, options: &ExponentialOptions) -> Result<ReconstructionReport> {
    let seq = neg_prob_sequence(data);
    let moments = exp_moment_conditions(data, &options.lambdas);
    let alpha = seq.fitted_alpha;
    if alpha.is_none() && !moments.condition_b() {
        return Err(Error::NotDetected(
            "no geometric decay of P(S_n < 0) and no stabilised mgf ratio above 1".into(),
        ));
    }
    let deficit = checked_deficit(data)?;
    let mut report = ReconstructionReport::new(DetectedClass::Exponential, None);
    if let Some(a) = alpha {
        report.residuals.insert("alpha".into(), a);
    }
    if deficit <= 1e-12 {
        let recovered = assemble(data, &[])?;
        let fwd = forward_residual(&recovered, data, data.horizon().min(8))?;
        report.recovered = Some(recovered);
        return Ok(report.residual("fit_residual", 0.0).residual("forward_residual", fwd));
    }

    let mut points = if alpha.is_some() {
        char_points(data, options)
    } else {
        Vec::new()
    };
    points.extend(
        moments
            .mgf_points()
            .into_iter()
            .map(|(lambda, phi)| Point::Mgf { lambda, phi }),
    );
    if points.is_empty() {
        return Err(Error::NotDetected("no transform point could be recovered".into()));
    }
    let r1 = data.restricted(1);
    let scale = 1.0 / data.refinement() as f64;

    // Right-hand sides: recovered transform minus the known positive part.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let build = |w: usize, rows: &mut Vec<(Vec<f64>, f64)>| {
        rows.clear();
        for p in &points {
            match *p {
                Point::Char { t, phi } => {
                    let known = eval_transform(r1, TransformKind::Characteristic, t * scale).value;
                    let rhs = phi - known;
                    let re: Vec<f64> = (1..=w).map(|j| (t * j as f64).cos()).collect();
                    let im: Vec<f64> = (1..=w).map(|j| -(t * j as f64).sin()).collect();
                    rows.push((re, rhs.re));
                    rows.push((im, rhs.im));
                }
                Point::Mgf { lambda, phi } => {
                    let known = eval_transform(r1, TransformKind::Mgf, lambda * scale).value.re;
                    let row: Vec<f64> = (1..=w).map(|j| (-lambda * j as f64).exp() / phi).collect();
                    rows.push((row, (phi - known) / phi));
                }
            }
        }
    };

    let mut best: Option<(usize, Vec<f64>, f64, f64)> = None;
    for w in 1..=options.w_max {
        build(w, &mut rows);
        let a = DMatrix::from_fn(rows.len(), w, |i, j| rows[i].0[j]);
        let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let cond = spectrum(&a).condition;
        if cond > options.max_condition {
            if best.is_none() {
                return Err(Error::Conditioning { condition: cond });
            }
            break;
        }
        let sol = solve_simplex_lsq(&a, &b, deficit, 0.0)?;
        let rel = sol.residual / b.norm().max(f64::MIN_POSITIVE);
        let better = best.as_ref().is_none_or(|(_, _, r, _)| rel < *r);
        if better {
            best = Some((w, sol.x, rel, cond));
        }
        if rel <= options.fit_tol {
            break;
        }
    }
    let (w, x, rel, cond) = best.expect("at least one window is tried");
    report = report
        .residual("fit_residual", rel)
        .residual("window", w as f64)
        .residual("condition", cond)
        .residual("transform_points", points.len() as f64);
    if rel > options.fit_tol {
        report.detected_class = DetectedClass::None;
        report
            .verdicts
            .insert("reason".into(), format!("best window {w} leaves relative residual {rel:e}"));
        return Ok(report);
    }
    let recovered = assemble(data, &x)?;
    let fwd = forward_residual(&recovered, data, data.horizon().min(8))?;
    report.recovered = Some(recovered);
    Ok(report.residual("forward_residual", fwd))
}
