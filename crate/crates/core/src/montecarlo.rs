//! Monte Carlo simulation of first ladder epochs, as a statistical oracle
//! for the exact killed-walk tables.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{LadderLaw, Side};
use crate::lattice::LatticeDist;

pub const DEFAULT_MAX_STEPS: u32 = 10_000;
/// Cells with a smaller expected count are not scored.
pub const MIN_EXPECTED: f64 = 25.0;
/// Largest `|z|` accepted.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WalkSample {
    pub seed: u64,
    pub steps_taken: u32,
    pub ladder_epoch: Option<u32>,
    pub ladder_height: Option<i64>,
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EmpiricalLadder {
    pub side: Side,
    pub counts: BTreeMap<(u32, i64), u64>,
    pub n_samples: u64,
    pub censored_count: u64,
    pub max_steps: u32,
}

/// Inverse-CDF sampler over a finite window.
struct StepSampler {
    offset: i64,
    cdf: Vec<f64>,
}

impl StepSampler {
    fn new(mu: &LatticeDist) -> Self {
        let mut acc = 0.0;
        let total = mu.total();
        let cdf = mu
            .weights()
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Self {
            offset: mu.offset(),
            cdf,
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> i64 {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.offset + idx as i64
    }
}

/// One walk from sample stream `index`. The generator is keyed by
/// `(seed, index)`, so a sample does not depend on how work is split.
pub fn simulate_one(mu: &LatticeDist, side: Side, max_steps: u32, seed: u64, index: u64) -> WalkSample {
    let sampler = StepSampler::new(mu);
    simulate_with(&sampler, side, max_steps, seed, index)
}

fn simulate_with(sampler: &StepSampler, side: Side, max_steps: u32, seed: u64, index: u64) -> WalkSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut s = 0i64;
    for step in 1..=max_steps {
        s += sampler.draw(&mut rng);
        if side.crosses(s) {
            return WalkSample {
                seed,
                steps_taken: step,
                ladder_epoch: Some(step),
                ladder_height: Some(s),
                censored: false,
            };
        }
    }
    WalkSample {
        seed,
        steps_taken: max_steps,
        ladder_epoch: None,
        ladder_height: None,
        censored: true,
    }
}

/// Tallies first ladder epochs and heights of `n_samples` independent walks.
pub fn sample_ladder(mu: &LatticeDist, side: Side, n_samples: u64, max_steps: u32, seed: u64) -> Result<EmpiricalLadder> {
    if mu.is_zero() {
        return Err(Error::InvalidDistribution("cannot sample from the zero measure".into()));
    }
    let sampler = StepSampler::new(mu);
    let (counts, censored_count) = (0..n_samples)
        .into_par_iter()
        .fold(
            || (BTreeMap::new(), 0u64),
            |(mut counts, mut censored), i| {
                let w = simulate_with(&sampler, side, max_steps, seed, i);
                match (w.ladder_epoch, w.ladder_height) {
                    (Some(n), Some(k)) => *counts.entry((n, k)).or_insert(0u64) += 1,
                    _ => censored += 1,
                }
                (counts, censored)
            },
        )
        .reduce(
            || (BTreeMap::new(), 0u64),
            |(mut a, ca), (b, cb)| {
                for (key, v) in b {
                    *a.entry(key).or_insert(0) += v;
                }
                (a, ca + cb)
            },
        );
    Ok(EmpiricalLadder {
        side,
        counts,
        n_samples,
        censored_count,
        max_steps,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonRow {
    pub n: u32,
    pub k: i64,
    pub count: u64,
    pub exact_mass: f64,
    pub z: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub max_abs_z: f64,
    /// z-score of the censored count against the exact surviving mass, when
    /// the exact law reaches `max_steps`.
    pub censored_z: Option<f64>,
    pub pass: bool,
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "n,k,count,exact_mass,z")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{:.16e},{:.16e}", r.n, r.k, r.count, r.exact_mass, r.z)?;
        }
        Ok(())
    }
}

fn z_score(observed: u64, n: u64, p: f64) -> f64 {
    let n = n as f64;
    let var = n * p * (1.0 - p);
    if var <= 0.0 {
        return if observed as f64 == n * p { 0.0 } else { f64::INFINITY };
    }
    (observed as f64 - n * p) / var.sqrt()
}

/// Per-cell binomial z-scores over cells with expected count ≥ 25.
///
/// Cells are scored within the exact law's horizon; with
/// `exact.horizon() ≥ emp.max_steps`, the censored count is scored
/// against the exact surviving mass too.
pub fn compare_empirical(exact: &LadderLaw, emp: &EmpiricalLadder) -> Result<Comparison> {
    if exact.side() != emp.side {
        return Err(Error::Domain("exact and empirical laws are for different sides".into()));
    }
    let n = emp.n_samples;
    let horizon = exact.horizon().min(emp.max_steps);
    let mut cells: BTreeMap<(u32, i64), (u64, f64)> = BTreeMap::new();
    for (epoch, k, p) in exact.cells().filter(|c| c.0 <= horizon) {
        cells.entry((epoch, k)).or_insert((0, 0.0)).1 = p;
    }
    for (&(epoch, k), &c) in emp.counts.iter().filter(|e| e.0 .0 <= horizon) {
        cells.entry((epoch, k)).or_insert((0, 0.0)).0 = c;
    }
    let rows: Vec<ComparisonRow> = cells
        .into_iter()
        .filter(|(_, (_, p))| n as f64 * p >= MIN_EXPECTED)
        .map(|((epoch, k), (count, p))| ComparisonRow {
            n: epoch,
            k,
            count,
            exact_mass: p,
            z: z_score(count, n, p),
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "no cell reaches an expected count of {MIN_EXPECTED} with {n} samples"
        )));
    }
    let max_abs_z = rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max);
    let censored_z = (exact.horizon() >= emp.max_steps)
        .then(|| z_score(emp.censored_count, n, exact.alive_after(emp.max_steps)));
    let pass = max_abs_z <= Z_LIMIT && censored_z.is_none_or(|z| z.abs() <= Z_LIMIT);
    Ok(Comparison {
        rows,
        max_abs_z,
        censored_z,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::ladder_law;

    #[test]
    fn zero_step_crosses_at_once() {
        let emp = sample_ladder(&LatticeDist::point(0), Side::Upward, 100, 10, 1).unwrap();
        assert_eq!(emp.counts.get(&(1, 0)), Some(&100));
    }

    #[test]
    fn descent_is_censored() {
        let emp = sample_ladder(&LatticeDist::point(-1), Side::Upward, 50, 20, 1).unwrap();
        assert_eq!(emp.censored_count, 50);
        assert!(emp.counts.is_empty());
    }

    #[test]
    fn reproducible() {
        let mu = LatticeDist::from_pairs(&[(-1, 0.5), (1, 0.5)]).unwrap();
        let a = sample_ladder(&mu, Side::Upward, 2000, 100, 9).unwrap();
        let b = sample_ladder(&mu, Side::Upward, 2000, 100, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn symmetric_walk_passes() {
        let mu = LatticeDist::from_pairs(&[(-1, 0.5), (1, 0.5)]).unwrap();
        let emp = sample_ladder(&mu, Side::Upward, 20_000, 200, 3).unwrap();
        let exact = ladder_law(&mu, Side::Upward, 200).unwrap();
        let cmp = compare_empirical(&exact, &emp).unwrap();
        assert!(cmp.pass, "max z {}", cmp.max_abs_z);
    }
}
