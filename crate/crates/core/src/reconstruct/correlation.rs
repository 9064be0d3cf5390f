//! Inversion of the one-sided correlation `b(n) = Σ_{j≥0} μ(-j) μ(n+j)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{assemble, checked_deficit, forward_residual, DetectedClass, ReconstructionReport, W_MAX};
use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::lattice::{LatticeDist, EPS_MASS};
use crate::lsq::{solve_simplex_lsq, spectrum};
use crate::pencil::{fit_geometric_mixture, Atom};

/// Slack in the complete-monotonicity test.
pub const EPS_CM: f64 = 1e-10;
/// Highest difference order in the complete-monotonicity test.
const CM_MAX_ORDER: usize = 20;
/// Condition number that triggers regularisation.
const COND_ESCALATE: f64 = 1e8;
/// Ridge weights tried in order.
const REG_LADDER: [f64; 5] = [0.0, 1e-10, 1e-8, 1e-6, 1e-4];
/// Sup-norm tolerance on `μ̂*² ↾ ℤ₊ - r₂` for accepting a window.
const DATA_TOL: f64 = 1e-9;

/// `b(n) = ½ (r₂(n) - Σ_{k=1}^{n-1} r₁(n-k) r₁(k))` for `n = 1..=M`, `M` the
/// top of `r₁`; `out[n-1] = b(n)`.
pub fn correlation_lhs_from_data(data: &TruncatedData) -> Result<Vec<f64>> {
    if data.horizon() < 2 {
        return Err(Error::Domain("correlation data need horizon >= 2".into()));
    }
    let r1 = data.restricted(1);
    let r2 = data.restricted(2);
    let m = r1.max_support().unwrap_or(0).max(0);
    Ok((1..=m)
        .map(|n| {
            let partial: f64 = (1..n).map(|k| r1.mass(n - k) * r1.mass(k)).sum();
            0.5 * (r2.mass(n) - partial)
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelationSolution {
    /// `x[j-1]` is the mass at `-j`.
    pub x: Vec<f64>,
    pub residual: f64,
    pub reg: f64,
    pub rank: usize,
    pub condition: f64,
}

/// Solves `min ‖Ax - b‖² + reg‖x‖²` over `x ≥ 0`, `Σx = deficit`, with
/// `A(n, j) = kernel(n + j)` for `n = 1..=b.len()`, `j = 1..=columns`.
///
/// A rank-deficient `A` is reported as an error rather than solved. The
/// ridge weight starts at zero and climbs [`REG_LADDER`] while the
/// regularised condition number exceeds `1e8`.
pub fn correlation_inverse(kernel: &LatticeDist, b: &[f64], deficit: f64, columns: usize) -> Result<CorrelationSolution> {
    if kernel.is_zero() {
        return Err(Error::Domain("correlation kernel is zero".into()));
    }
    if deficit < -EPS_MASS {
        return Err(Error::DataInconsistency(format!("negative required mass {deficit:e}")));
    }
    let a = DMatrix::from_fn(b.len(), columns, |n, j| kernel.mass((n + 1 + j + 1) as i64));
    let spec = spectrum(&a);
    if spec.rank < columns {
        return Err(Error::RankDeficient {
            rank: spec.rank,
            columns,
            singular_values: spec.singular_values,
        });
    }
    let smax = spec.singular_values[0];
    let smin = *spec.singular_values.last().unwrap();
    let reg = REG_LADDER
        .iter()
        .copied()
        .find(|&r| ((smax * smax + r) / (smin * smin + r)).sqrt() <= COND_ESCALATE)
        .unwrap_or(*REG_LADDER.last().unwrap());
    let rhs = DVector::from_column_slice(b);
    let sol = solve_simplex_lsq(&a, &rhs, deficit.max(0.0), reg)?;
    Ok(CorrelationSolution {
        x: sol.x,
        residual: sol.residual,
        reg,
        rank: spec.rank,
        condition: spec.condition,
    })
}

/// A moment sequence `b₀, b₁, ...` with optional representing atoms.
#[derive(Clone, Debug, Serialize)]
pub struct HausdorffMoments {
    pub moments: Vec<f64>,
    pub atoms: Option<Vec<(f64, f64)>>,
}

impl HausdorffMoments {
    pub fn new(moments: Vec<f64>) -> Self {
        Self { moments, atoms: None }
    }

    /// Checks `(-1)ʲ Δʲ bₖ ≥ -eps` for `j ≤ 20` and `k + j` inside the
    /// sequence. Sequences with fewer than three terms are rejected.
    pub fn is_completely_monotone(&self, eps: f64) -> bool {
        let len = self.moments.len();
        if len < 3 || self.moments.iter().any(|&v| v < -eps) {
            return false;
        }
        let mut diff = self.moments.clone();
        for _ in 1..=CM_MAX_ORDER.min(len - 1) {
            // diff ← -(Δ diff), so diff holds (-1)ʲ Δʲ b.
            diff = diff.windows(2).map(|w| w[0] - w[1]).collect();
            if diff.iter().any(|&v| v < -eps) {
                return false;
            }
        }
        true
    }

    /// Fits finite atoms `(cᵢ, wᵢ)` by the matrix-pencil method.
    pub fn fit_atoms(&mut self, max_order: usize) -> Result<&[(f64, f64)]> {
        let atoms = fit_geometric_mixture(&self.moments, max_order)?;
        self.atoms = Some(atoms.iter().map(|a| (a.node, a.weight)).collect());
        Ok(self.atoms.as_deref().unwrap())
    }
}

/// Best window for the direct route: `(data residual, window, solution)`.
fn direct_route(
    data: &TruncatedData,
    kernel: &LatticeDist,
    b: &[f64],
    deficit: f64,
) -> Result<(f64, usize, CorrelationSolution)> {
    let mut best: Option<(f64, usize, CorrelationSolution)> = None;
    let mut last_err = None;
    for w in 1..=W_MAX.min(b.len().max(1)) {
        match correlation_inverse(kernel, b, deficit, w) {
            Ok(sol) => {
                let fit = assemble(data, &sol.x)?;
                let res = forward_residual(&fit, data, 2)?;
                let better = best.as_ref().is_none_or(|(r, _, _)| res < *r);
                if better {
                    best = Some((res, w, sol));
                }
                if res <= DATA_TOL {
                    break;
                }
            }
            Err(e @ Error::RankDeficient { .. }) => {
                last_err = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::NotDetected("no correlation window".into())))
}

/// Moment route: atoms of `r₁`, then the generating function of the
/// negative part at the atoms, then a small simplex fit.
fn moment_route(data: &TruncatedData, b: &[f64], deficit: f64) -> Result<(f64, usize, Vec<f64>, Vec<Atom>)> {
    let r1 = data.restricted(1);
    let dense = r1.dense(0, r1.max_support().unwrap_or(0));
    let atoms = fit_geometric_mixture(&dense, 8)?;
    let m = atoms.len();
    // b(n) = Σ yᵢ cᵢⁿ with yᵢ = wᵢ G(cᵢ).
    let v = DMatrix::from_fn(b.len(), m, |n, i| atoms[i].node.powi(n as i32 + 1));
    let y = v
        .svd(true, true)
        .solve(&DVector::from_column_slice(b), 1e-14)
        .map_err(|_| Error::Conditioning { condition: f64::INFINITY })?;
    let g: Vec<f64> = atoms.iter().zip(y.iter()).map(|(a, &y)| y / a.weight).collect();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for w in 1..=(m + 1).min(W_MAX) {
        let h = DMatrix::from_fn(m, w, |i, j| atoms[i].node.powi(j as i32 + 1));
        let sol = solve_simplex_lsq(&h, &DVector::from_column_slice(&g), deficit, 0.0)?;
        let fit = assemble(data, &sol.x)?;
        let res = forward_residual(&fit, data, 2)?;
        if best.as_ref().is_none_or(|(r, _, _)| res < *r) {
            best = Some((res, w, sol.x));
        }
        if res <= DATA_TOL {
            break;
        }
    }
    let (res, w, x) = best.expect("at least one window");
    Ok((res, w, x, atoms))
}

/// Recovery for laws whose positive part is a completely monotone sequence.
pub fn recover_cm_discrete(data: &TruncatedData) -> Result<ReconstructionReport> {
    let r1 = data.restricted(1);
    let top = r1.max_support().unwrap_or(-1);
    let seq = HausdorffMoments::new(if top >= 0 { r1.dense(0, top) } else { Vec::new() });
    if !seq.is_completely_monotone(EPS_CM) {
        return Err(Error::NotDetected("restricted(1) is not completely monotone".into()));
    }
    let deficit = checked_deficit(data)?;
    if deficit <= 1e-12 {
        let recovered = assemble(data, &[])?;
        return Ok(ReconstructionReport::new(DetectedClass::DiscreteCm, Some(recovered)).residual("data_residual", 0.0));
    }
    let b: Vec<f64> = correlation_lhs_from_data(data)?
        .iter()
        .enumerate()
        .map(|(i, &v)| v - r1.mass(0) * r1.mass(i as i64 + 1))
        .collect();

    let direct = direct_route(data, r1, &b, deficit);
    let moment = moment_route(data, &b, deficit);
    let mut report = ReconstructionReport::new(DetectedClass::DiscreteCm, None);
    let mut candidates: Vec<(f64, &'static str, usize, Vec<f64>)> = Vec::new();
    match &direct {
        Ok((res, w, sol)) => {
            report.residuals.insert("direct_residual".into(), *res);
            report.residuals.insert("reg".into(), sol.reg);
            candidates.push((*res, "direct", *w, sol.x.clone()));
        }
        Err(e) => {
            report.verdicts.insert("direct_route".into(), e.to_string());
        }
    }
    match &moment {
        Ok((res, w, x, atoms)) => {
            report.residuals.insert("moment_residual".into(), *res);
            report.residuals.insert("atoms".into(), atoms.len() as f64);
            candidates.push((*res, "moment", *w, x.clone()));
        }
        Err(e) => {
            report.verdicts.insert("moment_route".into(), e.to_string());
        }
    }
    let Some((res, route, w, x)) = candidates.into_iter().min_by(|a, b| a.0.total_cmp(&b.0)) else {
        return Err(direct.expect_err("direct route failed"));
    };
    report.verdicts.insert("route".into(), route.into());
    report = report.residual("data_residual", res).residual("window", w as f64);
    if res > DATA_TOL {
        report.detected_class = DetectedClass::None;
        report
            .verdicts
            .insert("reason".into(), format!("best fit leaves data residual {res:e}"));
        return Ok(report);
    }
    report.recovered = Some(assemble(data, &x)?);
    Ok(report)
}

/// Generic correlation inversion with `r₁` as kernel, accepted only when
/// the fit reproduces the first powers.
pub fn recover_correlation(data: &TruncatedData) -> Result<ReconstructionReport> {
    let r1 = data.restricted(1);
    let deficit = checked_deficit(data)?;
    if deficit <= 1e-12 {
        let recovered = assemble(data, &[])?;
        return Ok(ReconstructionReport::new(DetectedClass::Correlation, Some(recovered)).residual("data_residual", 0.0));
    }
    let b: Vec<f64> = correlation_lhs_from_data(data)?
        .iter()
        .enumerate()
        .map(|(i, &v)| v - r1.mass(0) * r1.mass(i as i64 + 1))
        .collect();
    let (res, w, sol) = direct_route(data, r1, &b, deficit)?;
    let fit = assemble(data, &sol.x)?;
    let fwd = forward_residual(&fit, data, data.horizon().min(4))?;
    let mut report = ReconstructionReport::new(DetectedClass::Correlation, None)
        .residual("data_residual", res)
        .residual("forward_residual", fwd)
        .residual("window", w as f64)
        .residual("reg", sol.reg)
        .residual("condition", sol.condition);
    if res > DATA_TOL || fwd > DATA_TOL {
        report.detected_class = DetectedClass::None;
        report
            .verdicts
            .insert("reason".into(), format!("best fit leaves data residual {:e}", res.max(fwd)));
        return Ok(report);
    }
    report.recovered = Some(fit);
    Ok(report)
}
