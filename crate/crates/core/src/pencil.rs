//! Matrix-pencil fitting of real geometric mixtures `y(k) = Σ wᵢ cᵢᵏ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Model order is the first index where `σᵢ / σᵢ₊₁` reaches this ratio.
pub const ORDER_GAP: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub node: f64,
    pub weight: f64,
}

/// Fits atoms to `samples[k]`, `k = 0..len`. Returns atoms sorted by
/// decreasing node.
pub fn fit_geometric_mixture(samples: &[f64], max_order: usize) -> Result<Vec<Atom>> {
    let peak = samples.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::Conditioning { condition: f64::INFINITY });
    }
    // Keep the informative head of the sequence.
    let used = samples
        .iter()
        .rposition(|&v| v.abs() > peak * 1e-13)
        .map(|p| p + 1)
        .unwrap_or(0)
        .min(96);
    if used < 3 {
        return Err(Error::Conditioning { condition: f64::INFINITY });
    }
    let y = &samples[..used];
    let pencil = (used / 2).max(1);
    let rows = used - pencil;
    let hankel = DMatrix::from_fn(rows, pencil + 1, |i, j| y[i + j]);
    let svd = hankel.svd(false, true);
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let v_t = svd.v_t.expect("right singular vectors requested");

    let limit = max_order.min(sv.len().saturating_sub(1));
    let order = (0..limit)
        .find(|&i| sv[i + 1] <= 0.0 || sv[i] / sv[i + 1] >= ORDER_GAP)
        .map(|i| i + 1);
    let Some(order) = order else {
        return Err(Error::Conditioning {
            condition: sv[0] / sv.last().copied().unwrap_or(0.0),
        });
    };

    // Right singular vectors of the signal subspace, as columns.
    let v = v_t.rows(0, order).transpose();
    let v1 = v.rows(0, pencil).into_owned();
    let v2 = v.rows(1, pencil).into_owned();
    let pinv = v1
        .pseudo_inverse(1e-14)
        .map_err(|_| Error::Conditioning { condition: f64::INFINITY })?;
    let phi = pinv * v2;
    let eig = phi.complex_eigenvalues();
    let mut nodes = Vec::with_capacity(order);
    for z in eig.iter() {
        if z.im.abs() > 1e-8 * z.norm().max(1e-300) || z.re <= 0.0 || z.re >= 1.0 {
            return Err(Error::Conditioning {
                condition: sv[0] / sv[order - 1],
            });
        }
        nodes.push(z.re);
    }
    nodes.sort_by(|a, b| b.total_cmp(a));

    let vander = DMatrix::from_fn(used, order, |k, i| nodes[i].powi(k as i32));
    let rhs = DVector::from_column_slice(y);
    let weights = vander
        .svd(true, true)
        .solve(&rhs, 1e-15)
        .map_err(|_| Error::Conditioning { condition: f64::INFINITY })?;
    Ok(nodes
        .into_iter()
        .zip(weights.iter())
        .map(|(node, &weight)| Atom { node, weight })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_atom() {
        let y: Vec<f64> = (0..60).map(|k| 0.4 * 0.5f64.powi(k)).collect();
        let atoms = fit_geometric_mixture(&y, 8).unwrap();
        assert_eq!(atoms.len(), 1);
        assert_abs_diff_eq!(atoms[0].node, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(atoms[0].weight, 0.4, epsilon = 1e-10);
    }

    #[test]
    fn two_atoms() {
        let y: Vec<f64> = (0..120)
            .map(|k| 0.1 * 0.3f64.powi(k) + 0.05 * 0.7f64.powi(k))
            .collect();
        let atoms = fit_geometric_mixture(&y, 8).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_abs_diff_eq!(atoms[0].node, 0.7, epsilon = 1e-6);
        assert_abs_diff_eq!(atoms[1].node, 0.3, epsilon = 1e-6);
    }

    #[test]
    fn finite_support_is_not_geometric() {
        let y = vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert!(fit_geometric_mixture(&y, 4).is_err());
    }
}
