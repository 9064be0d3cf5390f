//! Ladder laws and space-time Wiener-Hopf factors of lattice random walks.
//!
//! Everything here is computed exactly (up to rounding) from a killed-walk
//! recursion: the law of `Sₙ` on the event that the walk has not crossed yet
//! is convolved with the step law, and the part that crosses is moved into
//! the ladder table.

pub mod diagnostics;
mod series;

pub use diagnostics::{
    drift_from_data, drift_of_distribution, exp_moment_conditions, ladder_renewal, neg_prob_sequence,
    spitzer_partial_sums, ConditionA, DecaySequence, Drift, ExpMomentReport, LambdaVerdict, RenewalEntry, Verdict,
    ALPHA_R2_MIN, NEG_PROB_FLOOR,
};
pub use series::{
    chi_eval, ladder_from_data, spitzer_chi, spitzer_chi_grid, verify_factorization, DataLadder,
    FactorizationReport, FactorizationRow, SeriesValue,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{convolve, LatticeDist};

/// Which first-passage event a ladder law records.
///
/// Boundary conventions: the ascending epoch is weak (`Sₙ ≥ 0`), the
/// descending one strict (`Sₙ < 0`). Survival for the upward walk is
/// therefore `Sₙ ≤ -1`, for the downward walk `Sₙ ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upward,
    Downward,
}

impl Side {
    /// Whether a walk at `height` has crossed.
    pub fn crosses(self, height: i64) -> bool {
        match self {
            Side::Upward => height >= 0,
            Side::Downward => height < 0,
        }
    }

    /// Split `law` into `(crossed, alive)` parts.
    pub fn split(self, law: &LatticeDist) -> (LatticeDist, LatticeDist) {
        let (lo, hi) = match (law.min_support(), law.max_support()) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return (LatticeDist::zero(), LatticeDist::zero()),
        };
        let nonneg = law.restrict_to(0, hi);
        let neg = law.restrict_to(lo, -1);
        match self {
            Side::Upward => (nonneg, neg),
            Side::Downward => (neg, nonneg),
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "upward" | "up" | "plus" => Ok(Side::Upward),
            "downward" | "down" | "minus" => Ok(Side::Downward),
            other => Err(Error::Domain(format!("unknown side {other:?}"))),
        }
    }
}

/// Law of `Sₙ` on the event that the walk has not crossed by step `n`.
#[derive(Clone, Debug)]
pub struct KilledWalkState {
    pub step: u32,
    pub alive: LatticeDist,
}

/// Step-by-step killed-walk recursion.
pub struct KilledWalk<'a> {
    step_law: &'a LatticeDist,
    side: Side,
    state: KilledWalkState,
}

impl<'a> KilledWalk<'a> {
    pub fn new(step_law: &'a LatticeDist, side: Side) -> Self {
        Self {
            step_law,
            side,
            state: KilledWalkState {
                step: 0,
                alive: LatticeDist::point(0),
            },
        }
    }

    pub fn state(&self) -> &KilledWalkState {
        &self.state
    }

    /// Advances one step and returns the mass crossing at that step.
    pub fn advance(&mut self) -> Result<LatticeDist> {
        let next = convolve(&self.state.alive, self.step_law)?;
        let (crossed, alive) = self.side.split(&next);
        self.state = KilledWalkState {
            step: self.state.step + 1,
            alive,
        };
        Ok(crossed)
    }
}

/// Joint law of `(τ, S_τ)` on `{τ ≤ horizon}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderLaw {
    side: Side,
    /// `epochs[n-1]` is the height law at epoch `n`.
    epochs: Vec<LatticeDist>,
    /// `alive[n]` is the surviving mass after `n` steps; `alive[0] = 1`.
    alive: Vec<f64>,
}

impl LadderLaw {
    /// Builds a law from explicit epoch tables; surviving masses are
    /// inferred as `1 - Σ_{m≤n} P(τ = m)`.
    pub fn from_epochs(side: Side, epochs: Vec<LatticeDist>) -> Result<Self> {
        let mut alive = Vec::with_capacity(epochs.len() + 1);
        alive.push(1.0);
        let mut acc = 1.0;
        for (i, e) in epochs.iter().enumerate() {
            if e.iter().any(|(k, w)| w > 0.0 && !side.crosses(k)) {
                return Err(Error::Domain(format!("epoch {} has mass on the survival side", i + 1)));
            }
            acc -= e.total();
            alive.push(acc.max(0.0));
        }
        if acc < -1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "ladder masses sum to {} > 1",
                1.0 - acc
            )));
        }
        Ok(Self { side, epochs, alive })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn horizon(&self) -> u32 {
        self.epochs.len() as u32
    }

    /// Height law at epoch `n` (1-based).
    pub fn epoch(&self, n: u32) -> &LatticeDist {
        &self.epochs[(n - 1) as usize]
    }

    pub fn epochs(&self) -> &[LatticeDist] {
        &self.epochs
    }

    pub fn mass(&self, n: u32, k: i64) -> f64 {
        if n == 0 || n > self.horizon() {
            0.0
        } else {
            self.epoch(n).mass(k)
        }
    }

    /// `P(τ = n)`.
    pub fn marginal(&self, n: u32) -> f64 {
        self.epoch(n).total()
    }

    /// `P(τ ≤ horizon)`.
    pub fn total(&self) -> f64 {
        self.epochs.iter().map(LatticeDist::total).sum()
    }

    /// Surviving mass after `n` steps, `P(τ > n)`.
    pub fn alive_after(&self, n: u32) -> f64 {
        self.alive[n as usize]
    }

    /// Nonzero cells `(n, k, mass)` in epoch order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, i64, f64)> + '_ {
        self.epochs.iter().enumerate().flat_map(|(i, e)| {
            e.iter()
                .filter(|&(_, w)| w > 0.0)
                .map(move |(k, w)| (i as u32 + 1, k, w))
        })
    }

    /// Copy with `delta` added to one cell, for negative controls.
    pub fn perturbed(&self, n: u32, k: i64, delta: f64) -> Result<Self> {
        let mut epochs = self.epochs.clone();
        let e = &epochs[(n - 1) as usize];
        let bump = LatticeDist::from_pairs(&[(k, delta)])?;
        epochs[(n - 1) as usize] = e.add(&bump)?;
        Self::from_epochs(self.side, epochs)
    }
}

/// Exact joint law of `(τ, S_τ)` for epochs up to `horizon`.
pub fn ladder_law(mu: &LatticeDist, side: Side, horizon: u32) -> Result<LadderLaw> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    let mut walk = KilledWalk::new(mu, side);
    let mut epochs = Vec::with_capacity(horizon as usize);
    let mut alive = Vec::with_capacity(horizon as usize + 1);
    alive.push(1.0);
    for _ in 0..horizon {
        epochs.push(walk.advance()?);
        alive.push(walk.state().alive.total());
    }
    Ok(LadderLaw { side, epochs, alive })
}
