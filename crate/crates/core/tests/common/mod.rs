#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whlab_core::LatticeDist;

/// Random proper laws with windows inside `[-reach, reach]` that put mass
/// on both sides of zero.
pub fn corpus(seed: u64, count: usize, reach: i64) -> Vec<LatticeDist> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let lo = rng.random_range(-reach..=-1);
            let hi = rng.random_range(1..=reach);
            let mut w: Vec<f64> = (lo..=hi).map(|_| rng.random::<f64>()).collect();
            // Sparse interiors exercise periodic lattices.
            for v in w.iter_mut().skip(1).rev().skip(1) {
                if rng.random::<f64>() < 0.3 {
                    *v = 0.0;
                }
            }
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            LatticeDist::new(lo, w).unwrap()
        })
        .collect()
}

/// `n` equispaced points in `[0, 2π)`.
pub fn t_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| std::f64::consts::TAU * j as f64 / n as f64).collect()
}

pub fn s_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}
