//! Convolution with laws on the nonpositive half-line.

use crate::data::TruncatedData;
use crate::error::{Error, Result};
use crate::lattice::{convolution_power, convolve, restrict_nonneg, LatticeDist};

fn check_nonpositive(nu: &LatticeDist) -> Result<()> {
    match nu.max_support() {
        Some(top) if top > 0 => Err(Error::Domain(format!("ν has mass at {top} > 0"))),
        None => Err(Error::Domain("ν is the zero measure".into())),
        _ => Ok(()),
    }
}

/// Half-line data of `μ ⊛ ν` from half-line data of `μ` and the full `ν`.
///
/// `(μ ⊛ ν)*ⁿ ↾ ℤ₊ = (rₙ ⊛ ν*ⁿ) ↾ ℤ₊` because `ν*ⁿ` only moves mass
/// downwards, so the negative part of `μ*ⁿ` never reaches `ℤ₊`.
pub fn extend_by_negative(data: &TruncatedData, nu: &LatticeDist) -> Result<TruncatedData> {
    check_nonpositive(nu)?;
    let mut power = nu.clone();
    let mut out = Vec::with_capacity(data.horizon() as usize);
    for n in 1..=data.horizon() {
        let r = data.restricted(n);
        let ext = restrict_nonneg(&convolve(r, &power)?).with_truncated_mass(r.truncated_mass())?;
        out.push(ext);
        if n < data.horizon() {
            power = convolve(&power, nu)?;
        }
    }
    let tm = 1.0 - (1.0 - data.truncated_mass()) * (1.0 - nu.truncated_mass());
    TruncatedData::new(out, data.refinement(), tm)
}

/// Inverts one power of [`extend_by_negative`]: given `extended = (rₙ ⊛ ν*ⁿ) ↾ ℤ₊`,
/// returns `rₙ` on `[n·d, ∞)`, with `-d` the top of `ν`. Mass of `rₙ` below
/// `n·d` is not visible in the extended data.
///
/// Back-substitution from the top divides by `ν(top)ⁿ`, so rounding grows
/// geometrically with `n` when `ν` is spread out.
pub fn deconvolve_negative(extended: &LatticeDist, nu: &LatticeDist, n: u32) -> Result<LatticeDist> {
    check_nonpositive(nu)?;
    let d = -nu.max_support().unwrap();
    let g = convolution_power(&nu.shift(d), n)?;
    let shift = d * n as i64;
    let lead = g.mass(0);
    let Some(top) = extended.max_support() else {
        return Ok(LatticeDist::zero());
    };
    let top_r = top + shift;
    let len = (top_r - shift + 1) as usize;
    // r[m - shift] for m = shift..=top_r.
    let mut r = vec![0.0; len];
    for m in (shift..=top_r).rev() {
        let mut acc = extended.mass(m - shift);
        for (k, w) in g.iter() {
            if k < 0 {
                let above = m - k;
                if above <= top_r {
                    acc -= w * r[(above - shift) as usize];
                }
            }
        }
        r[(m - shift) as usize] = acc / lead;
    }
    Ok(LatticeDist::from_raw(shift, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_extension() {
        let mu = LatticeDist::uniform(-2, 3).unwrap();
        let data = TruncatedData::from_distribution(&mu, 5).unwrap();
        let ext = extend_by_negative(&data, &LatticeDist::point(0)).unwrap();
        assert_eq!(ext, data);
    }

    #[test]
    fn unit_shift() {
        let mu = LatticeDist::uniform(-2, 3).unwrap();
        let data = TruncatedData::from_distribution(&mu, 5).unwrap();
        let ext = extend_by_negative(&data, &LatticeDist::point(-1)).unwrap();
        for n in 1..=5u32 {
            for k in 0..10 {
                assert_eq!(ext.restricted(n).mass(k), data.restricted(n).mass(k + n as i64));
            }
        }
    }

    #[test]
    fn rejects_positive_support() {
        let data = TruncatedData::from_distribution(&LatticeDist::point(0), 2).unwrap();
        assert!(extend_by_negative(&data, &LatticeDist::point(1)).is_err());
    }

    #[test]
    fn deconvolution_recovers_first_power() {
        let mu = LatticeDist::from_pairs(&[(-2, 0.2), (0, 0.1), (1, 0.3), (4, 0.4)]).unwrap();
        let data = TruncatedData::from_distribution(&mu, 2).unwrap();
        let nu = LatticeDist::from_pairs(&[(-1, 0.5), (0, 0.5)]).unwrap();
        let ext = extend_by_negative(&data, &nu).unwrap();
        let back = deconvolve_negative(ext.restricted(1), &nu, 1).unwrap();
        assert!(back.sup_distance(data.restricted(1)) < 1e-15);
    }
}
