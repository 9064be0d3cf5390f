//! Series evaluations of the ladder factors.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::{ladder_law, LadderLaw, Side};
use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::lattice::{convolve, eval_transform, LatticeDist, TransformKind};

/// A truncated series value with a certified bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: Complex64,
    pub bound: f64,
}

fn check_disc(s: Complex64) -> Result<f64> {
    let r = s.norm();
    if r.is_nan() || r >= 1.0 {
        return Err(Error::OutsideUnitDisc(r));
    }
    Ok(r)
}

/// Powers `e^{itk}` for `k = offset, offset+1, ...`, built by a phasor
/// recurrence that is re-anchored every 64 steps.
fn phasors(t: f64, offset: i64, len: usize) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, t);
    let mut out = Vec::with_capacity(len);
    let mut z = Complex64::new(0.0, 0.0);
    for i in 0..len {
        if i % 64 == 0 {
            z = Complex64::from_polar(1.0, t * (offset + i as i64) as f64);
        } else {
            z *= step;
        }
        out.push(z);
    }
    out
}

fn char_sum(d: &LatticeDist, t: f64) -> Complex64 {
    if d.is_zero() {
        return Complex64::new(0.0, 0.0);
    }
    phasors(t, d.offset(), d.len())
        .iter()
        .zip(d.weights())
        .map(|(z, &w)| z * w)
        .sum()
}

/// `E[s^τ e^{itS_τ}; τ ≤ N]` with the tail bound `|s|^{N+1} / (1 - |s|)`.
pub fn chi_eval(law: &LadderLaw, s: Complex64, t: f64) -> Result<SeriesValue> {
    let r = check_disc(s)?;
    let mut value = Complex64::new(0.0, 0.0);
    let mut sn = Complex64::new(1.0, 0.0);
    for epoch in law.epochs() {
        sn *= s;
        value += sn * char_sum(epoch, t);
    }
    let bound = r.powi(law.horizon() as i32 + 1) / (1.0 - r);
    Ok(SeriesValue { value, bound })
}

/// Upward factor from half-line data through
/// `log 1/(1 - χ₊) = Σ sⁿ/n ∫_{[0,∞)} e^{itx} μ*ⁿ(dx)`.
pub fn spitzer_chi(data: &TruncatedData, s: Complex64, t: f64) -> Result<SeriesValue> {
    let r = check_disc(s)?;
    let grid_t = t / data.refinement() as f64;
    let sums: Vec<Complex64> = data.iter().map(|rn| char_sum(rn, grid_t)).collect();
    Ok(spitzer_from_sums(&sums, s, r))
}

fn spitzer_from_sums(sums: &[Complex64], s: Complex64, r: f64) -> SeriesValue {
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut sn = Complex64::new(1.0, 0.0);
    for (i, a) in sums.iter().enumerate() {
        sn *= s;
        log_sum += sn * a / (i + 1) as f64;
    }
    let n = sums.len() as i32;
    let delta = r.powi(n + 1) / ((n + 1) as f64 * (1.0 - r));
    let e = (-log_sum).exp();
    SeriesValue {
        value: Complex64::new(1.0, 0.0) - e,
        bound: e.norm() * delta.exp_m1(),
    }
}

/// [`spitzer_chi`] over a product grid; `out[i][j]` is at `(s_values[i], t_values[j])`.
pub fn spitzer_chi_grid(data: &TruncatedData, s_values: &[f64], t_values: &[f64]) -> Result<Vec<Vec<SeriesValue>>> {
    for &s in s_values {
        check_disc(Complex64::new(s, 0.0))?;
    }
    let per_t: Vec<Vec<Complex64>> = t_values
        .iter()
        .map(|&t| {
            let grid_t = t / data.refinement() as f64;
            data.iter().map(|rn| char_sum(rn, grid_t)).collect()
        })
        .collect();
    Ok(s_values
        .iter()
        .map(|&s| {
            per_t
                .iter()
                .map(|sums| spitzer_from_sums(sums, Complex64::new(s, 0.0), s.abs()))
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationRow {
    pub s: f64,
    pub t: f64,
    pub chi_plus: Complex64,
    pub chi_minus: Complex64,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub horizon: u32,
    pub rows: Vec<FactorizationRow>,
}

impl FactorizationReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }

    /// Largest `residual - bound` over the grid.
    pub fn max_excess(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.residual - r.bound)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether every row satisfies `residual ≤ bound + slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.rows.iter().all(|r| r.residual <= r.bound + slack)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "s,t,chi_plus_re,chi_plus_im,chi_minus_re,chi_minus_im,residual,bound"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.s, r.t, r.chi_plus.re, r.chi_plus.im, r.chi_minus.re, r.chi_minus.im, r.residual, r.bound
            )?;
        }
        Ok(())
    }
}

/// Residual of `1 - sφ(t) = (1 - χ₋)(1 - χ₊)` over `s_values × t_values`,
/// with both factors from horizon-`N` ladder laws. The per-row bound
/// propagates the two truncation bounds through the product.
pub fn verify_factorization(
    mu: &LatticeDist,
    s_values: &[f64],
    t_values: &[f64],
    horizon: u32,
) -> Result<FactorizationReport> {
    let up = ladder_law(mu, Side::Upward, horizon)?;
    let down = ladder_law(mu, Side::Downward, horizon)?;
    let mut rows = Vec::with_capacity(s_values.len() * t_values.len());
    for &s in s_values {
        let sc = Complex64::new(s, 0.0);
        for &t in t_values {
            let plus = chi_eval(&up, sc, t)?;
            let minus = chi_eval(&down, sc, t)?;
            let phi = eval_transform(mu, TransformKind::Characteristic, t).value;
            let lhs = Complex64::new(1.0, 0.0) - sc * phi;
            let rhs = (Complex64::new(1.0, 0.0) - minus.value) * (Complex64::new(1.0, 0.0) - plus.value);
            let a = 1.0 + s.abs();
            rows.push(FactorizationRow {
                s,
                t,
                chi_plus: plus.value,
                chi_minus: minus.value,
                residual: (lhs - rhs).norm(),
                bound: a * (plus.bound + minus.bound) + plus.bound * minus.bound,
            });
        }
    }
    Ok(FactorizationReport { horizon, rows })
}

/// Upward ladder law recovered from half-line data alone.
///
/// Heights are kept up to `window`, which is exact because every term of the
/// series lives on `ℤ₊`. Epoch totals are computed from the data totals and
/// are exact for all heights.
#[derive(Clone, Debug)]
pub struct DataLadder {
    pub window: i64,
    /// `epochs[n-1]` restricted to heights `0..=window`.
    pub epochs: Vec<LatticeDist>,
    /// `marginals[n-1] = P(τ₊ = n)`.
    pub marginals: Vec<f64>,
}

impl DataLadder {
    /// `P(S_τ > h, τ ≤ N)` for `0 ≤ h ≤ window`.
    pub fn height_tail(&self, h: i64) -> f64 {
        let total: f64 = self.marginals.iter().sum();
        let below: f64 = self
            .epochs
            .iter()
            .map(|e| e.iter().filter(|&(k, _)| k <= h).map(|(_, w)| w).sum::<f64>())
            .sum();
        total - below
    }
}

/// Inverts `1/(1 - χ₊) = exp(Σ sⁿ/n Rₙ)` coefficientwise: with
/// `n Eₙ = Σ_{k=1}^{n} Rₖ ⊛ E_{n-k}` and `Eₙ = Cₙ + Σ_{k=1}^{n-1} Cₖ ⊛ E_{n-k}`,
/// `Cₙ` is the height law at epoch `n`.
pub fn ladder_from_data(data: &TruncatedData, window: i64) -> Result<DataLadder> {
    let window = window.max(0);
    let n_max = data.horizon() as usize;
    let cut = |d: LatticeDist| d.restrict_to(0, window);
    let r: Vec<LatticeDist> = data.iter().map(|d| cut(d.clone())).collect();
    let p: Vec<f64> = data.iter().map(LatticeDist::total).collect();

    let mut e = vec![LatticeDist::point(0)];
    let mut c: Vec<LatticeDist> = Vec::with_capacity(n_max);
    let mut es = vec![1.0];
    let mut cs: Vec<f64> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut acc = vec![0.0; window as usize + 1];
        let mut acc_s = 0.0;
        for k in 1..=n {
            add_into(&mut acc, &convolve(&r[k - 1], &e[n - k])?, window);
            acc_s += p[k - 1] * es[n - k];
        }
        acc.iter_mut().for_each(|v| *v /= n as f64);
        acc_s /= n as f64;
        let mut cn = acc.clone();
        let mut cn_s = acc_s;
        for k in 1..n {
            sub_from(&mut cn, &convolve(&c[k - 1], &e[n - k])?, window);
            cn_s -= cs[k - 1] * es[n - k];
        }
        e.push(LatticeDist::from_raw(0, acc));
        es.push(acc_s);
        c.push(LatticeDist::from_raw(0, cn));
        cs.push(cn_s.max(0.0));
    }
    Ok(DataLadder {
        window,
        epochs: c,
        marginals: cs,
    })
}

fn add_into(acc: &mut [f64], d: &LatticeDist, window: i64) {
    for (k, w) in d.iter() {
        if (0..=window).contains(&k) {
            acc[k as usize] += w;
        }
    }
}

fn sub_from(acc: &mut [f64], d: &LatticeDist, window: i64) {
    for (k, w) in d.iter() {
        if (0..=window).contains(&k) {
            acc[k as usize] -= w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn unit_step_factor() {
        let law = ladder_law(&LatticeDist::point(1), Side::Upward, 10).unwrap();
        let v = chi_eval(&law, c(0.5), 0.7).unwrap();
        let expected = Complex64::from_polar(0.5, 0.7);
        assert!((v.value - expected).norm() < 1e-15);
    }

    #[test]
    fn rejects_outside_disc() {
        let law = ladder_law(&LatticeDist::point(0), Side::Upward, 3).unwrap();
        assert!(matches!(chi_eval(&law, c(1.0), 0.0), Err(Error::OutsideUnitDisc(_))));
    }

    #[test]
    fn spitzer_at_origin() {
        let data = TruncatedData::from_distribution(&LatticeDist::point(0), 80).unwrap();
        let v = spitzer_chi(&data, c(0.4), 1.3).unwrap();
        assert!((v.value - c(0.4)).norm() <= v.bound + 1e-15);
    }

    #[test]
    fn symmetric_walk_oracles_agree() {
        let mu = LatticeDist::from_pairs(&[(-1, 0.5), (1, 0.5)]).unwrap();
        let law = ladder_law(&mu, Side::Upward, 120).unwrap();
        let data = TruncatedData::from_distribution(&mu, 120).unwrap();
        let a = chi_eval(&law, c(0.5), 0.0).unwrap();
        let b = spitzer_chi(&data, c(0.5), 0.0).unwrap();
        assert!((a.value - b.value).norm() <= a.bound + b.bound + 1e-10);
    }

    #[test]
    fn data_ladder_matches_dp() {
        let mu = LatticeDist::from_pairs(&[(-2, 0.3), (-1, 0.2), (1, 0.1), (3, 0.4)]).unwrap();
        let data = TruncatedData::from_distribution(&mu, 25).unwrap();
        let from_data = ladder_from_data(&data, 3).unwrap();
        let law = ladder_law(&mu, Side::Upward, 25).unwrap();
        for n in 1..=25u32 {
            assert_abs_diff_eq!(from_data.marginals[n as usize - 1], law.marginal(n), epsilon = 1e-13);
            for k in 0..=3 {
                assert_abs_diff_eq!(from_data.epochs[n as usize - 1].mass(k), law.mass(n, k), epsilon = 1e-13);
            }
        }
    }
}
