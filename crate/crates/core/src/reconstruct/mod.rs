//! Recovering a step law from its half-line convolution powers.

mod correlation;
mod exponential;
mod extension;
mod skipfree;
mod triangular;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use correlation::{
    correlation_inverse, correlation_lhs_from_data, recover_cm_discrete, recover_correlation, CorrelationSolution,
    HausdorffMoments, EPS_CM,
};
pub use exponential::{recover_exponential, ExponentialOptions};
pub use extension::{deconvolve_negative, extend_by_negative};
pub use skipfree::{recover_skipfree, EPS_V};
pub use triangular::{infer_triangular_shape, recover_triangular};

use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::lattice::{convolve, restrict_nonneg, LatticeDist, EPS_MASS};

/// Largest negative window searched by the window-hypothesis loops.
pub const W_MAX: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectedClass {
    Exponential,
    SkipFree,
    Triangular,
    DiscreteCm,
    Correlation,
    None,
}

/// A detector that [`auto_reconstruct_with`] can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Exponential,
    SkipFree,
    Triangular,
    DiscreteCm,
    Correlation,
}

impl Detector {
    /// All detectors in dispatch order.
    pub const ALL: [Detector; 5] = [
        Detector::Exponential,
        Detector::SkipFree,
        Detector::Triangular,
        Detector::DiscreteCm,
        Detector::Correlation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Exponential => "exponential",
            Detector::SkipFree => "skip_free",
            Detector::Triangular => "triangular",
            Detector::DiscreteCm => "discrete_cm",
            Detector::Correlation => "correlation",
        }
    }

    fn run(self, data: &TruncatedData) -> Result<ReconstructionReport> {
        match self {
            Detector::Exponential => recover_exponential(data, &ExponentialOptions::default()),
            Detector::SkipFree => recover_skipfree(data),
            Detector::Triangular => {
                let (a, b) = infer_triangular_shape(data)?;
                recover_triangular(data, a, b)
            }
            Detector::DiscreteCm => recover_cm_discrete(data),
            Detector::Correlation => recover_correlation(data),
        }
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Detector::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown detector {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub detected_class: DetectedClass,
    pub recovered: Option<LatticeDist>,
    pub residuals: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, String>,
}

impl ReconstructionReport {
    pub fn new(detected_class: DetectedClass, recovered: Option<LatticeDist>) -> Self {
        Self {
            detected_class,
            recovered,
            residuals: BTreeMap::new(),
            verdicts: BTreeMap::new(),
        }
    }

    pub fn none() -> Self {
        Self::new(DetectedClass::None, None)
    }

    pub fn residual(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub fn detected(&self) -> bool {
        self.detected_class != DetectedClass::None && self.recovered.is_some()
    }

    /// Adds `tv_distance` against a known truth.
    pub fn with_truth(mut self, truth: &LatticeDist) -> Self {
        if let Some(r) = &self.recovered {
            self.residuals.insert("tv_distance".into(), r.tv_distance(truth));
        }
        self
    }

    pub fn tv_distance(&self) -> Option<f64> {
        self.residuals.get("tv_distance").copied()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Whether every restricted power lives on the integer lattice.
pub fn detect_lattice(data: &TruncatedData) -> bool {
    data.off_lattice().is_empty()
}

/// Runs every detector in dispatch order.
pub fn auto_reconstruct(data: &TruncatedData) -> ReconstructionReport {
    auto_reconstruct_with(data, &Detector::ALL)
}

/// Runs the enabled detectors in dispatch order and returns the first
/// success, with every verdict attached. Detectors after the winner are
/// recorded as skipped.
pub fn auto_reconstruct_with(data: &TruncatedData, enabled: &[Detector]) -> ReconstructionReport {
    let mut verdicts = BTreeMap::new();
    let lattice = detect_lattice(data);
    verdicts.insert("lattice".to_string(), lattice.to_string());
    let data = match data.to_lattice() {
        Ok(d) if lattice => d,
        _ => {
            let mut report = ReconstructionReport::none();
            for d in Detector::ALL.iter().filter(|d| enabled.contains(d)) {
                verdicts.insert(d.name().into(), "rejected: support is not on the integer lattice".into());
            }
            report.verdicts = verdicts;
            return report;
        }
    };
    let mut winner: Option<ReconstructionReport> = None;
    for detector in Detector::ALL {
        if !enabled.contains(&detector) {
            continue;
        }
        if winner.is_some() {
            verdicts.insert(detector.name().into(), "skipped".into());
            continue;
        }
        match detector.run(&data) {
            Ok(report) if report.detected() => {
                verdicts.insert(detector.name().into(), "detected".into());
                winner = Some(report);
            }
            Ok(report) => {
                let why = report
                    .verdicts
                    .get("reason")
                    .cloned()
                    .unwrap_or_else(|| "no recovery".into());
                verdicts.insert(detector.name().into(), format!("rejected: {why}"));
            }
            Err(e) => {
                verdicts.insert(detector.name().into(), format!("rejected: {e}"));
            }
        }
    }
    let mut report = winner.unwrap_or_else(ReconstructionReport::none);
    for (k, v) in report.verdicts.iter() {
        verdicts.entry(format!("detail.{k}")).or_insert_with(|| v.clone());
    }
    report.verdicts = verdicts;
    report
}

/// `r₁` joined with masses `negative[j-1]` at sites `-j`.
pub(crate) fn assemble(data: &TruncatedData, negative: &[f64]) -> Result<LatticeDist> {
    let r1 = data.restricted(1);
    let pairs: Vec<(i64, f64)> = negative
        .iter()
        .enumerate()
        .map(|(j, &w)| (-(j as i64) - 1, w.max(0.0)))
        .collect();
    let neg = LatticeDist::from_pairs(&pairs)?;
    r1.add(&neg)?.with_truncated_mass(data.truncated_mass())
}

/// `max_{n ≤ n_max} sup |μ̂*ⁿ ↾ ℤ₊ - rₙ|`.
pub(crate) fn forward_residual(mu_hat: &LatticeDist, data: &TruncatedData, n_max: u32) -> Result<f64> {
    let n_max = n_max.min(data.horizon());
    let mut power = mu_hat.clone();
    let mut worst: f64 = 0.0;
    for n in 1..=n_max {
        worst = worst.max(restrict_nonneg(&power).sup_distance(data.restricted(n)));
        if n < n_max {
            power = convolve(&power, mu_hat)?;
        }
    }
    Ok(worst)
}

/// Negative mass the data leave unexplained, checked for feasibility.
pub(crate) fn checked_deficit(data: &TruncatedData) -> Result<f64> {
    let deficit = data.deficit();
    if deficit < -EPS_MASS {
        return Err(Error::DataInconsistency(format!(
            "restricted(1) carries more than unit mass (deficit {deficit:e})"
        )));
    }
    Ok(deficit.max(0.0))
}
