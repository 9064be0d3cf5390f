//! The known data: convolution powers restricted to the nonnegative half-line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{convolve, restrict_nonneg, LatticeDist, EPS_MASS, EPS_TRIM};

/// `restricted[n-1] = μ*ⁿ ↾ ℤ₊` for `n = 1..=horizon`.
///
/// Sites are in units of `1 / refinement`; `refinement = 1` is the integer
/// lattice. Finer grids let [`crate::reconstruct::detect_lattice`] decide
/// whether the underlying law lives on the integers.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedData {
    restricted: Vec<LatticeDist>,
    refinement: u32,
    truncated_mass: f64,
}

impl TruncatedData {
    pub fn new(restricted: Vec<LatticeDist>, refinement: u32, truncated_mass: f64) -> Result<Self> {
        if restricted.is_empty() {
            return Err(Error::Domain("truncated data needs horizon >= 1".into()));
        }
        if refinement == 0 {
            return Err(Error::Domain("refinement must be positive".into()));
        }
        for (i, r) in restricted.iter().enumerate() {
            if r.min_support().is_some_and(|lo| lo < 0) {
                return Err(Error::DataInconsistency(format!(
                    "restricted power {} has mass below 0",
                    i + 1
                )));
            }
            if r.total() > 1.0 + EPS_MASS {
                return Err(Error::DataInconsistency(format!(
                    "restricted power {} has total {} > 1",
                    i + 1,
                    r.total()
                )));
            }
        }
        Ok(Self {
            restricted,
            refinement,
            truncated_mass,
        })
    }

    /// Forward map `μ ↦ (μ*ⁿ ↾ ℤ₊)_{n ≤ horizon}` on the integer lattice.
    pub fn from_distribution(mu: &LatticeDist, horizon: u32) -> Result<Self> {
        Self::from_refined(mu, 1, horizon)
    }

    /// Forward map for a law given on the grid `ℤ / refinement`.
    pub fn from_refined(mu: &LatticeDist, refinement: u32, horizon: u32) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Domain("horizon must be >= 1".into()));
        }
        let top = mu.max_support().unwrap_or(0).max(0);
        let tau = mu.truncated_mass();
        let mut restricted = Vec::with_capacity(horizon as usize);
        let mut power = mu.clone();
        for n in 1..=horizon {
            let lost = 1.0 - (1.0 - tau).powi(n as i32);
            restricted.push(restrict_nonneg(&power).with_truncated_mass(lost.max(0.0))?);
            if n == horizon {
                break;
            }
            // Mass this far below zero cannot return within the horizon.
            let floor = -(top * (horizon - n) as i64);
            let hi = power.max_support().unwrap_or(0);
            power = power.restrict_to(floor, hi);
            power = convolve(&power, mu)?;
        }
        Self::new(restricted, refinement, tau)
    }

    pub fn horizon(&self) -> u32 {
        self.restricted.len() as u32
    }

    pub fn refinement(&self) -> u32 {
        self.refinement
    }

    /// Mass of `μ` lost to truncation of its support.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// `μ*ⁿ ↾ ℤ₊`, with `n` 1-based.
    pub fn restricted(&self, n: u32) -> &LatticeDist {
        &self.restricted[(n - 1) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &LatticeDist> {
        self.restricted.iter()
    }

    /// `P(Sₙ < 0) = 1 - μ*ⁿ[0, ∞)`, clamped to `[0, 1]`.
    pub fn neg_prob(&self, n: u32) -> f64 {
        (1.0 - self.restricted(n).total()).clamp(0.0, 1.0)
    }

    /// Mass of `μ` on the negative half-line not accounted for by the data.
    pub fn deficit(&self) -> f64 {
        1.0 - self.restricted(1).total() - self.truncated_mass
    }

    /// First `horizon` powers only.
    pub fn truncate_horizon(&self, horizon: u32) -> Self {
        let h = (horizon as usize).clamp(1, self.restricted.len());
        Self {
            restricted: self.restricted[..h].to_vec(),
            refinement: self.refinement,
            truncated_mass: self.truncated_mass,
        }
    }

    /// Sites off the integer lattice, as `(n, site in grid units, mass)`.
    pub fn off_lattice(&self) -> Vec<(u32, i64, f64)> {
        let m = self.refinement as i64;
        let mut out = Vec::new();
        for (i, r) in self.restricted.iter().enumerate() {
            for (k, w) in r.iter() {
                if k.rem_euclid(m) != 0 && w > EPS_TRIM {
                    out.push((i as u32 + 1, k, w));
                }
            }
        }
        out
    }

    /// Re-expresses lattice-supported data on the integer grid.
    pub fn to_lattice(&self) -> Result<Self> {
        if self.refinement == 1 {
            return Ok(self.clone());
        }
        if let Some(&(n, k, w)) = self.off_lattice().first() {
            return Err(Error::Domain(format!(
                "power {n} has mass {w:e} at {k}/{} off the integer lattice",
                self.refinement
            )));
        }
        let m = self.refinement as i64;
        let restricted = self
            .restricted
            .iter()
            .map(|r| {
                let pairs: Vec<(i64, f64)> = r
                    .iter()
                    .filter(|&(k, _)| k.rem_euclid(m) == 0)
                    .map(|(k, w)| (k / m, w))
                    .collect();
                LatticeDist::from_pairs(&pairs)?.with_truncated_mass(r.truncated_mass())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(restricted, 1, self.truncated_mass)
    }

    /// Writes one distribution file per power plus `manifest.json`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::with_capacity(self.restricted.len());
        for (i, r) in self.restricted.iter().enumerate() {
            let name = format!("restricted_{:04}.json", i + 1);
            let body = serde_json::to_vec(r)?;
            files.push(ManifestEntry {
                n: i as u32 + 1,
                file: name.clone(),
                sha256: sha256_hex(&body),
            });
            fs::write(dir.join(&name), body)?;
        }
        let manifest = Manifest {
            horizon: self.horizon(),
            refinement: self.refinement,
            truncated_mass: self.truncated_mass,
            files,
        };
        fs::write(dir.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reads a directory written by [`TruncatedData::write_dir`], checking hashes.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST))?)?;
        if manifest.files.len() != manifest.horizon as usize {
            return Err(Error::DataInconsistency(format!(
                "manifest lists {} files for horizon {}",
                manifest.files.len(),
                manifest.horizon
            )));
        }
        let mut entries = manifest.files;
        entries.sort_by_key(|e| e.n);
        let mut restricted = Vec::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            if entry.n as usize != i + 1 {
                return Err(Error::DataInconsistency(format!("manifest is missing power {}", i + 1)));
            }
            let body = fs::read(dir.join(&entry.file))?;
            let digest = sha256_hex(&body);
            if digest != entry.sha256 {
                return Err(Error::DataInconsistency(format!(
                    "hash mismatch for {}: manifest {}, file {}",
                    entry.file, entry.sha256, digest
                )));
            }
            restricted.push(serde_json::from_slice(&body)?);
        }
        Self::new(restricted, manifest.refinement, manifest.truncated_mass)
    }
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    horizon: u32,
    #[serde(default = "one")]
    refinement: u32,
    #[serde(default)]
    truncated_mass: f64,
    files: Vec<ManifestEntry>,
}

fn one() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    n: u32,
    file: String,
    sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::convolution_power;

    #[test]
    fn forward_matches_powers() {
        let mu = LatticeDist::from_pairs(&[(-3, 0.2), (-1, 0.3), (2, 0.5)]).unwrap();
        let data = TruncatedData::from_distribution(&mu, 6).unwrap();
        for n in 1..=6 {
            let full = restrict_nonneg(&convolution_power(&mu, n).unwrap());
            assert!(data.restricted(n).sup_distance(&full) < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn dir_round_trip() {
        let mu = LatticeDist::uniform(-2, 3).unwrap();
        let data = TruncatedData::from_distribution(&mu, 5).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        data.write_dir(tmp.path()).unwrap();
        let back = TruncatedData::read_dir(tmp.path()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn detects_tampering() {
        let data = TruncatedData::from_distribution(&LatticeDist::uniform(-1, 1).unwrap(), 2).unwrap();
        let tmp = tempfile::tempdir().unwrap();
        data.write_dir(tmp.path()).unwrap();
        fs::write(
            tmp.path().join("restricted_0002.json"),
            br#"{"offset":0,"weights":[0.5],"truncated_mass":0.0}"#,
        )
        .unwrap();
        assert!(matches!(
            TruncatedData::read_dir(tmp.path()),
            Err(Error::DataInconsistency(_))
        ));
    }
}
