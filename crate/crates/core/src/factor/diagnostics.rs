//! Drift, decay and exponential-moment diagnostics.

use serde::{Deserialize, Serialize};

use super::{KilledWalk, Side};
use crate::data::TruncatedData;
use crate::error::Result;
use crate::lattice::{LatticeDist, EPS_TRIM};

/// Values of `P(Sₙ < 0)` below this are treated as rounding noise.
pub const NEG_PROB_FLOOR: f64 = 1e-11;
/// Minimum coefficient of determination for the geometric-rate fit.
pub const ALPHA_R2_MIN: f64 = 0.999;
/// Block length of the moving sums used in the geometric-rate fit.
const BLOCK: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecaySequence {
    /// `values[n-1] = P(Sₙ < 0)`.
    pub values: Vec<f64>,
    /// Geometric rate `α` with `P(Sₙ < 0) ≈ C e^{-αn}`; `+∞` when the
    /// sequence vanishes identically.
    pub fitted_alpha: Option<f64>,
}

impl DecaySequence {
    pub fn value(&self, n: u32) -> f64 {
        self.values[(n - 1) as usize]
    }
}

/// `P(Sₙ < 0) = 1 - μ*ⁿ[0, ∞)` with a geometric-rate fit.
pub fn neg_prob_sequence(data: &TruncatedData) -> DecaySequence {
    let values: Vec<f64> = (1..=data.horizon()).map(|n| data.neg_prob(n)).collect();
    let fitted_alpha = fit_alpha(&values);
    DecaySequence { values, fitted_alpha }
}

fn fit_alpha(values: &[f64]) -> Option<f64> {
    if values.iter().all(|&v| v <= 10.0 * EPS_TRIM) {
        return Some(f64::INFINITY);
    }
    let usable_len = values.iter().take_while(|&&v| v > NEG_PROB_FLOOR).count();
    // Moving block sums absorb periodic lattice effects without changing the rate.
    let usable: Vec<(f64, f64)> = (0..usable_len.saturating_sub(BLOCK - 1))
        .map(|i| ((i + 1) as f64, values[i..i + BLOCK].iter().sum::<f64>().ln()))
        .collect();
    let tail = &usable[usable.len() / 2..];
    if tail.len() < 4 {
        return None;
    }
    let (slope, r2) = linear_fit(tail);
    let span = tail.last().unwrap().0 - tail[0].0;
    // Require at least a decade of decay across the fitted range.
    if slope < 0.0 && r2 >= ALPHA_R2_MIN && -slope * span >= std::f64::consts::LN_10 {
        Some(-slope)
    } else {
        None
    }
}

/// Least-squares slope and `R²` of `y` against `x`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drift {
    DriftsPlus,
    DriftsMinus,
    Oscillates,
    Undecided,
}

/// Exact classification by the sign of the mean.
pub fn drift_of_distribution(mu: &LatticeDist) -> Drift {
    let mean = mu.first_moment();
    if mean.abs() <= 1e-12 {
        Drift::Oscillates
    } else if mean > 0.0 {
        Drift::DriftsPlus
    } else {
        Drift::DriftsMinus
    }
}

/// Partial Spitzer sums `(Σ P(Sₙ<0)/n, Σ P(Sₙ≥0)/n)` over the horizon.
pub fn spitzer_partial_sums(data: &TruncatedData) -> (f64, f64) {
    (1..=data.horizon()).fold((0.0, 0.0), |(neg, pos), n| {
        let p = data.neg_prob(n);
        (neg + p / n as f64, pos + (1.0 - p) / n as f64)
    })
}

/// Heuristic classification from half-line data.
///
/// A valid geometric rate for `P(Sₙ < 0)` means drift to `+∞`. Otherwise
/// the side whose probability is small and decaying at least like `n^{-1/2}`
/// over the second half of the horizon wins; two sides both bounded away
/// from zero and flat mean oscillation.
pub fn drift_from_data(data: &TruncatedData) -> Drift {
    let seq = neg_prob_sequence(data);
    if seq.fitted_alpha.is_some() {
        return Drift::DriftsPlus;
    }
    let n = seq.values.len();
    if n < 8 {
        return Drift::Undecided;
    }
    let p_last = seq.values[n - 1];
    let q_last = 1.0 - p_last;
    let slope = |f: &dyn Fn(f64) -> f64| -> Option<f64> {
        let pts: Vec<(f64, f64)> = (n / 2..n)
            .filter_map(|i| {
                let v = f(seq.values[i]);
                (v > NEG_PROB_FLOOR).then(|| (((i + 1) as f64).ln(), v.ln()))
            })
            .collect();
        (pts.len() >= 4).then(|| linear_fit(&pts).0)
    };
    let p_slope = slope(&|p| p);
    let q_slope = slope(&|p| 1.0 - p);
    if q_last <= 0.05 && q_slope.is_none_or(|s| s <= -0.5) {
        return Drift::DriftsMinus;
    }
    if p_last <= 0.05 && p_slope.is_none_or(|s| s <= -0.5) {
        return Drift::DriftsPlus;
    }
    let flat = |s: Option<f64>| s.is_some_and(|s| s.abs() < 0.5);
    if (0.05..=0.95).contains(&p_last) && flat(p_slope) && flat(q_slope) {
        return Drift::Oscillates;
    }
    Drift::Undecided
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails,
    Undecided,
}

/// Condition (a): geometric decay of `P(Sₙ < 0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionA {
    pub alpha: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaVerdict {
    pub lambda: f64,
    /// Most stable ratio `a_{m+1} / a_m` over the second half of the horizon.
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpMomentReport {
    pub condition_a: ConditionA,
    pub lambdas: Vec<LambdaVerdict>,
}

impl ExpMomentReport {
    /// Condition (b): some `λ > 0` with a stabilised ratio above 1.
    pub fn condition_b(&self) -> bool {
        self.lambdas.iter().any(|l| l.verdict == Verdict::Holds)
    }

    /// The grid points where condition (b) holds, with `φ(λ)`.
    pub fn mgf_points(&self) -> Vec<(f64, f64)> {
        self.lambdas
            .iter()
            .filter(|l| l.verdict == Verdict::Holds)
            .filter_map(|l| l.ratio.map(|r| (l.lambda, r)))
            .collect()
    }
}

/// Relative tolerance for a stabilised ratio.
const RATIO_STABLE: f64 = 1e-11;

/// `log aₙ(λ)` with `aₙ = Σ_k e^{λk} rₙ(k)`, by log-sum-exp.
pub fn log_mgf_restricted(r: &LatticeDist, lambda: f64) -> Option<f64> {
    let m = r
        .iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(k, w)| lambda * k as f64 + w.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return None;
    }
    let s: f64 = r
        .iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(k, w)| (lambda * k as f64 + w.ln() - m).exp())
        .sum();
    Some(m + s.ln())
}

/// Ratio-statistic estimates of `φ(λ)` for `λ > 0` plus condition (a).
///
/// Data with truncated mass leave every `λ` undecided: the cut tail hides
/// exactly the information that decides finiteness of `φ(λ)`.
pub fn exp_moment_conditions(data: &TruncatedData, lambdas: &[f64]) -> ExpMomentReport {
    let seq = neg_prob_sequence(data);
    let condition_a = ConditionA {
        alpha: seq.fitted_alpha,
        holds: seq.fitted_alpha.is_some(),
    };
    let scale = 1.0 / data.refinement() as f64;
    let n = data.horizon();
    let lambdas = lambdas
        .iter()
        .map(|&lambda| {
            let grid_lambda = lambda * scale;
            let ratio_at = |m: u32| -> Option<f64> {
                let hi = log_mgf_restricted(data.restricted(m + 1), grid_lambda)?;
                let lo = log_mgf_restricted(data.restricted(m), grid_lambda)?;
                Some((hi - lo).exp())
            };
            // Edge trimming perturbs the last few powers, so the estimate is
            // taken where consecutive ratios over the second half agree best.
            let ratios: Vec<(u32, Option<f64>)> = ((n / 2).max(1)..n).map(|m| (m, ratio_at(m))).collect();
            let best = ratios
                .windows(2)
                .filter_map(|w| match (w[0].1, w[1].1) {
                    (Some(p), Some(r)) => Some((r, (r - p).abs() / r)),
                    _ => None,
                })
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let verdict = if lambda <= 0.0 || data.truncated_mass() > 0.0 {
                Verdict::Undecided
            } else {
                match best {
                    Some((r, spread)) if spread <= RATIO_STABLE => {
                        if r > 1.0 + 1e-9 {
                            Verdict::Holds
                        } else {
                            Verdict::Fails
                        }
                    }
                    _ => Verdict::Undecided,
                }
            };
            let last = best.map(|b| b.0);
            LambdaVerdict {
                lambda,
                ratio: last,
                verdict,
            }
        })
        .collect();
    ExpMomentReport { condition_a, lambdas }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RenewalEntry {
    pub r: i64,
    pub value: f64,
    /// True when killed-walk mass survived the horizon, so `value` is a
    /// lower bound of the full renewal measure.
    pub lower_bound: bool,
}

/// Renewal measure of the strict descending ladder heights,
/// `v(r) = Σ_{m≤N} P(S₁ < 0, ..., S_m < 0, S_m = -r)`, for `r = 1..=r_max`.
pub fn ladder_renewal(mu: &LatticeDist, r_max: i64, horizon: u32) -> Result<Vec<RenewalEntry>> {
    let mut v = vec![0.0; r_max.max(0) as usize];
    let mut walk = KilledWalk::new(mu, Side::Upward);
    for _ in 0..horizon {
        walk.advance()?;
        for (k, w) in walk.state().alive.iter() {
            if (1..=r_max).contains(&-k) {
                v[(-k - 1) as usize] += w;
            }
        }
        if walk.state().alive.is_zero() {
            break;
        }
    }
    let open = walk.state().alive.total() > EPS_TRIM;
    Ok(v.into_iter()
        .enumerate()
        .map(|(i, value)| RenewalEntry {
            r: i as i64 + 1,
            value,
            lower_bound: open,
        })
        .collect())
}
