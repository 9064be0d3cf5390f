//! Least squares on the scaled simplex `{x ≥ 0, Σx = total}` with optional
//! ridge penalty, solved by a primal active-set method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `REL_RANK_TOL · σ_max` count as zero.
pub const REL_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
    pub rank: usize,
    pub condition: f64,
}

/// Singular values (descending), numerical rank and condition number of `a`.
pub fn spectrum(a: &DMatrix<f64>) -> Spectrum {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Spectrum {
            singular_values: Vec::new(),
            rank: 0,
            condition: f64::INFINITY,
        };
    }
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let max = sv[0];
    let rank = if max > 0.0 {
        sv.iter().filter(|&&s| s > max * REL_RANK_TOL).count()
    } else {
        0
    };
    let min = *sv.last().unwrap();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    Spectrum {
        singular_values: sv,
        rank,
        condition,
    }
}

#[derive(Clone, Debug)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    /// `‖Ax - b‖₂` (the penalty term is not included).
    pub residual: f64,
    pub iterations: usize,
}

/// Minimises `‖Ax - b‖² + reg·‖x‖²` subject to `x ≥ 0` and `Σx = total`.
pub fn solve_simplex_lsq(a: &DMatrix<f64>, b: &DVector<f64>, total: f64, reg: f64) -> Result<SimplexSolution> {
    let n = a.ncols();
    if a.nrows() != b.len() {
        return Err(Error::Domain(format!(
            "matrix has {} rows but right-hand side has {}",
            a.nrows(),
            b.len()
        )));
    }
    if total < 0.0 {
        return Err(Error::DataInconsistency(format!("required total mass {total} is negative")));
    }
    if n == 0 || total == 0.0 {
        let x = vec![0.0; n];
        let residual = b.norm();
        return Ok(SimplexSolution {
            x,
            residual,
            iterations: 0,
        });
    }

    let scale = a.norm() * b.norm() + a.norm().powi(2) * total + 1.0;
    let kkt_tol = 1e-13 * scale;
    let mut x = vec![total / n as f64; n];
    let mut passive: Vec<bool> = vec![true; n];
    let max_iter = 20 * n + 20;

    for iter in 0..max_iter {
        let idx: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let z = equality_ls(a, b, &idx, total, reg);

        let infeasible = idx.iter().any(|&i| z[i] < 0.0);
        if !infeasible {
            x = z;
            let grad = gradient(a, b, &x, reg);
            let nu = idx.iter().map(|&i| grad[i]).sum::<f64>() / idx.len() as f64;
            let entering = (0..n)
                .filter(|&i| !passive[i])
                .map(|i| (i, grad[i] - nu))
                .min_by(|p, q| p.1.total_cmp(&q.1));
            match entering {
                Some((i, lambda)) if lambda < -kkt_tol => passive[i] = true,
                _ => {
                    let residual = (a * DVector::from_vec(x.clone()) - b).norm();
                    return Ok(SimplexSolution {
                        x,
                        residual,
                        iterations: iter + 1,
                    });
                }
            }
        } else {
            // Step towards z until the first passive coordinate hits zero.
            let mut alpha = 1.0f64;
            for &i in &idx {
                if z[i] < 0.0 {
                    let denom = x[i] - z[i];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            for &i in &idx {
                x[i] += alpha * (z[i] - x[i]);
            }
            let floor = 1e-15 * total;
            for &i in &idx {
                if x[i] <= floor {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                // Numerical collapse; restart from the largest coordinate of z.
                let best = idx
                    .iter()
                    .copied()
                    .max_by(|&p, &q| z[p].total_cmp(&z[q]))
                    .unwrap();
                passive[best] = true;
                x = vec![0.0; n];
                x[best] = total;
            }
            // Renormalise against drift in Σx.
            let s: f64 = x.iter().sum();
            if s > 0.0 {
                x.iter_mut().for_each(|v| *v *= total / s);
            }
        }
    }
    let residual = (a * DVector::from_vec(x.clone()) - b).norm();
    Ok(SimplexSolution {
        x,
        residual,
        iterations: max_iter,
    })
}

fn gradient(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64], reg: f64) -> Vec<f64> {
    let xv = DVector::from_column_slice(x);
    let r = a * &xv - b;
    let g = a.transpose() * r + xv * reg;
    g.iter().copied().collect()
}

/// Equality-constrained least squares on the passive coordinates `idx`,
/// other coordinates held at zero. The last passive coordinate is eliminated
/// through `Σx = total`.
fn equality_ls(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize], total: f64, reg: f64) -> Vec<f64> {
    let n = a.ncols();
    let mut out = vec![0.0; n];
    if idx.len() == 1 {
        out[idx[0]] = total;
        return out;
    }
    let last = *idx.last().unwrap();
    let free = &idx[..idx.len() - 1];
    let m = a.nrows();
    let k = free.len();
    let sr = reg.sqrt();
    let extra = if reg > 0.0 { k + 1 } else { 0 };
    let mut mat = DMatrix::<f64>::zeros(m + extra, k);
    let mut rhs = DVector::<f64>::zeros(m + extra);
    for r in 0..m {
        for (c, &j) in free.iter().enumerate() {
            mat[(r, c)] = a[(r, j)] - a[(r, last)];
        }
        rhs[r] = b[r] - a[(r, last)] * total;
    }
    if reg > 0.0 {
        for c in 0..k {
            mat[(m + c, c)] = sr;
            mat[(m + k, c)] = -sr;
        }
        rhs[m + k] = -sr * total;
    }
    let svd = mat.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let y = svd
        .solve(&rhs, smax * 1e-13)
        .unwrap_or_else(|_| DVector::zeros(k));
    let mut acc = 0.0;
    for (c, &j) in free.iter().enumerate() {
        out[j] = y[c];
        acc += y[c];
    }
    out[last] = total - acc;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn recovers_interior_solution() {
        let a = DMatrix::from_row_slice(4, 3, &[1.0, 0.5, 0.2, 0.3, 1.0, 0.1, 0.2, 0.4, 1.0, 0.7, 0.1, 0.3]);
        let truth = DVector::from_vec(vec![0.2, 0.5, 0.3]);
        let b = &a * &truth;
        let sol = solve_simplex_lsq(&a, &b, 1.0, 0.0).unwrap();
        for (x, t) in sol.x.iter().zip(truth.iter()) {
            assert_abs_diff_eq!(*x, *t, epsilon = 1e-12);
        }
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn active_bound() {
        // Unconstrained optimum has a negative coordinate.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![1.5, -0.5]);
        let sol = solve_simplex_lsq(&a, &b, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(sol.x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sol.x[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_total() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![0.3]);
        let sol = solve_simplex_lsq(&a, &b, 0.0, 0.0).unwrap();
        assert_eq!(sol.x, vec![0.0, 0.0]);
    }

    #[test]
    fn rank_one_spectrum() {
        let a = DMatrix::from_fn(6, 3, |i, j| 0.5f64.powi((i + j + 2) as i32));
        let s = spectrum(&a);
        assert_eq!(s.rank, 1);
    }
}
