//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whlab_core::factor::{chi_eval, ladder_law, spitzer_chi_grid, verify_factorization, Side};
use whlab_core::families::{cubic_tail_example, geometric_mixture, geometric_mixture_mass, two_point};
use whlab_core::lattice::{convolve, cross_correlation_lhs, cross_correlation_lhs_direct};
use whlab_core::montecarlo::{compare_empirical, sample_ladder, DEFAULT_MAX_STEPS};
use whlab_core::reconstruct::{
    auto_reconstruct, correlation_inverse, deconvolve_negative, extend_by_negative, recover_cm_discrete,
    recover_exponential, recover_skipfree, DetectedClass, ExponentialOptions,
};
use whlab_core::{Error, LatticeDist, TruncatedData};

const HORIZON: u32 = 200;

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn factorization_identity() -> Outcome {
    let start = Instant::now();
    let corpus = common::corpus(11, 100, 5);
    let s = common::s_grid();
    let t = common::t_grid(32);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for mu in &corpus {
        let report = verify_factorization(mu, &s, &t, HORIZON).unwrap();
        for row in &report.rows {
            let allowed = 3.0 * row.s.powi(HORIZON as i32 + 1) / (1.0 - row.s) + 1e-10;
            worst_ratio = worst_ratio.max(row.residual / allowed);
            worst_residual = worst_residual.max(row.residual);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_ratio <= 1.0 && secs < 30.0,
        format!("max residual {worst_residual:.3e}, max residual/allowed {worst_ratio:.3e}, {secs:.2} s"),
    )
}

fn oracle_equivalence() -> Outcome {
    let corpus = common::corpus(11, 100, 5);
    let s = common::s_grid();
    let t = common::t_grid(32);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_gap: f64 = 0.0;
    for mu in &corpus {
        let law = ladder_law(mu, Side::Upward, HORIZON).unwrap();
        let data = TruncatedData::from_distribution(mu, HORIZON).unwrap();
        let grid = spitzer_chi_grid(&data, &s, &t).unwrap();
        for (i, &sv) in s.iter().enumerate() {
            for (j, &tv) in t.iter().enumerate() {
                let dp = chi_eval(&law, Complex64::new(sv, 0.0), tv).unwrap();
                let sp = grid[i][j];
                let gap = (dp.value - sp.value).norm();
                worst_gap = worst_gap.max(gap);
                worst_excess = worst_excess.max(gap - (dp.bound + sp.bound + 1e-10));
            }
        }
    }
    outcome(
        worst_excess <= 0.0,
        format!("max |dp - spitzer| {worst_gap:.3e}, max excess over bounds {worst_excess:.3e}"),
    )
}

fn cross_correlation() -> Outcome {
    let corpus = common::corpus(11, 100, 5);
    let mut worst: f64 = 0.0;
    for mu in &corpus {
        let width = mu.max_support().unwrap() - mu.min_support().unwrap() + 1;
        for n in 1..=2 * width {
            let a = cross_correlation_lhs(mu, n).unwrap();
            let b = cross_correlation_lhs_direct(mu, n);
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |half-line - direct| {worst:.3e}"))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut notes = Vec::new();
    let mut pass = true;

    // (a) Downward skip-free with nonpositive drift.
    let mut worst_a: f64 = 0.0;
    let mut classes_a = true;
    for _ in 0..10 {
        let top = rng.random_range(1..=5);
        let mut pos: Vec<f64> = (0..=top).map(|_| rng.random::<f64>()).collect();
        let scale = rng.random_range(0.2..0.5) / pos.iter().sum::<f64>();
        pos.iter_mut().for_each(|v| *v *= scale);
        let mean_pos: f64 = pos.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let q = 1.0 - pos.iter().sum::<f64>();
        if mean_pos > q {
            // Push mass towards zero until the drift is nonpositive.
            let excess = mean_pos - q;
            let f = 1.0 - excess / mean_pos;
            let moved: f64 = pos.iter().skip(1).map(|w| w * (1.0 - f)).sum();
            pos.iter_mut().skip(1).for_each(|w| *w *= f);
            pos[0] += moved;
        }
        let mut pairs: Vec<(i64, f64)> = pos.iter().enumerate().map(|(k, &w)| (k as i64, w)).collect();
        pairs.push((-1, q));
        let mu = LatticeDist::from_pairs(&pairs).unwrap();
        let data = TruncatedData::from_distribution(&mu, HORIZON).unwrap();
        let report = recover_skipfree(&data).unwrap().with_truth(&mu);
        classes_a &= report.detected_class == DetectedClass::SkipFree;
        worst_a = worst_a.max(report.tv_distance().unwrap_or(f64::INFINITY));
    }
    let ok_a = classes_a && worst_a <= 1e-10;
    pass &= ok_a;
    notes.push(format!("(a) skip-free class {classes_a}, TV {worst_a:.2e}"));

    // (b) Two-point laws drifting upward.
    let mut worst_b: f64 = 0.0;
    for p in [0.1, 0.2, 0.3, 0.4] {
        let mu = two_point(-1, 1, p).unwrap();
        let data = TruncatedData::from_distribution(&mu, HORIZON).unwrap();
        let tv = recover_exponential(&data, &ExponentialOptions::default())
            .map(|r| r.with_truth(&mu).tv_distance().unwrap_or(f64::INFINITY))
            .unwrap_or(f64::INFINITY);
        worst_b = worst_b.max(tv);
    }
    let ok_b = worst_b <= 1e-6;
    pass &= ok_b;
    notes.push(format!("(b) exponential TV {worst_b:.2e}"));

    // (c) Cubic-tail example with the gap pattern a = 1, b = 3.
    let mu = cubic_tail_example(200).unwrap();
    let data = TruncatedData::from_distribution(&mu, HORIZON).unwrap();
    let report = auto_reconstruct(&data);
    let exp_fails = recover_exponential(&data, &ExponentialOptions::default()).is_err();
    let sf_fails = recover_skipfree(&data).map(|r| !r.detected()).unwrap_or(true);
    let err_c = report
        .recovered
        .as_ref()
        .map(|r| (r.mass(-2) - mu.mass(-2)).abs().max((r.mass(-1) - mu.mass(-1)).abs()))
        .unwrap_or(f64::INFINITY);
    let ok_c = report.detected_class == DetectedClass::Triangular && exp_fails && sf_fails && err_c <= 1e-8;
    pass &= ok_c;
    notes.push(format!(
        "(c) class {:?}, exponential rejects {exp_fails}, skip-free rejects {sf_fails}, error {err_c:.2e}",
        report.detected_class
    ));

    // (d) Two-atom completely monotone positive parts.
    let mut worst_d: f64 = 0.0;
    let mut classes_d = true;
    for _ in 0..10 {
        let c1 = rng.random_range(0.2..0.6);
        let c2 = rng.random_range(c1 + 0.2..=0.8);
        let split = rng.random_range(0.3..0.7);
        let target = rng.random_range(0.3..0.55);
        let atoms = [(c1, split * (1.0 - c1)), (c2, (1.0 - split) * (1.0 - c2))];
        let scale = target / geometric_mixture_mass(&atoms);
        let atoms = atoms.map(|(c, w)| (c, w * scale));
        let neg = 1.0 - target;
        let f = rng.random_range(0.2..0.8);
        let mu = geometric_mixture(&atoms, &[(-1, f * neg), (-2, (1.0 - f) * neg)], 200).unwrap();
        let data = TruncatedData::from_distribution(&mu, 50).unwrap();
        let direct = recover_cm_discrete(&data).map(|r| r.with_truth(&mu));
        let auto = auto_reconstruct(&data).with_truth(&mu);
        classes_d &= auto.detected_class == DetectedClass::DiscreteCm;
        let tv = direct
            .ok()
            .and_then(|r| r.tv_distance())
            .unwrap_or(f64::INFINITY)
            .max(auto.tv_distance().unwrap_or(f64::INFINITY));
        worst_d = worst_d.max(tv);
    }
    let ok_d = classes_d && worst_d <= 1e-4;
    pass &= ok_d;
    notes.push(format!("(d) discrete-CM class {classes_d}, TV {worst_d:.2e}"));
    outcome(pass, notes.join("; "))
}

fn degenerate_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut flagged = 0;
    for _ in 0..10 {
        let rho: f64 = rng.random_range(0.2..0.8);
        let mass = rng.random_range(0.3..0.6);
        let w = mass * (1.0 - rho);
        let kernel = LatticeDist::new(0, (0..200).map(|k| w * rho.powi(k)).collect()).unwrap();
        let sites = rng.random_range(2..=4usize);
        let mut x: Vec<f64> = (0..sites).map(|_| rng.random::<f64>()).collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v *= (1.0 - mass) / s);
        let b: Vec<f64> = (1..=120)
            .map(|n| {
                x.iter()
                    .enumerate()
                    .map(|(j, xj)| xj * kernel.mass(n + j as i64 + 1))
                    .sum()
            })
            .collect();
        if let Err(Error::RankDeficient { rank: 1, .. }) = correlation_inverse(&kernel, &b, 1.0 - mass, sites) {
            flagged += 1;
        }
    }
    outcome(flagged == 10, format!("{flagged}/10 instances reported rank 1"))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let laws = [
        ("uniform{-1,1}", two_point(-1, 1, 0.5).unwrap()),
        ("two-point drift", two_point(-1, 1, 0.3).unwrap()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, mu) in &laws {
        let emp = sample_ladder(mu, Side::Upward, 100_000, DEFAULT_MAX_STEPS, 2024).unwrap();
        let exact = ladder_law(mu, Side::Upward, DEFAULT_MAX_STEPS).unwrap();
        let cmp = compare_empirical(&exact, &emp).unwrap();
        let cz = cmp.censored_z.unwrap_or(f64::NAN);
        pass &= cmp.pass && cz.abs() <= 4.0;
        notes.push(format!("{name}: max |z| {:.2}, censored z {cz:.2}", cmp.max_abs_z));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 10.0;
    notes.push(format!("{secs:.2} s"));
    outcome(pass, notes.join("; "))
}

fn negative_extension() -> Outcome {
    let corpus = common::corpus(7, 20, 5);
    let nus = [
        LatticeDist::point(-1),
        LatticeDist::from_pairs(&[(-1, 0.5), (0, 0.5)]).unwrap(),
    ];
    let mut worst_ext: f64 = 0.0;
    let mut worst_dec: f64 = 0.0;
    for mu in &corpus {
        let data = TruncatedData::from_distribution(mu, 30).unwrap();
        for nu in &nus {
            let ext = extend_by_negative(&data, nu).unwrap();
            let full = TruncatedData::from_distribution(&convolve(mu, nu).unwrap(), 30).unwrap();
            for n in 1..=30 {
                worst_ext = worst_ext.max(ext.restricted(n).sup_distance(full.restricted(n)));
            }
            let back = deconvolve_negative(ext.restricted(1), nu, 1).unwrap();
            let lo = back.offset().max(0);
            let hi = data.restricted(1).max_support().unwrap_or(0);
            let seen = data.restricted(1).restrict_to(lo, hi);
            worst_dec = worst_dec.max(back.sup_distance(&seen));
        }
    }
    outcome(
        worst_ext <= 1e-14 && worst_dec <= 1e-10,
        format!("extension error {worst_ext:.2e}, deconvolution error {worst_dec:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 7] = [
        ("factorization identity", factorization_identity),
        ("ladder DP vs Spitzer series", oracle_equivalence),
        ("cross-correlation identity", cross_correlation),
        ("round-trip reconstruction", round_trip),
        ("degenerate kernel reports rank deficiency", degenerate_kernel),
        ("Monte Carlo agreement", monte_carlo),
        ("negative-support extension", negative_extension),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{}]: {} ({})",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
