mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use whlab_core::lattice::exact::{convolve_exact, RationalDist};
use whlab_core::lattice::{
    convolution_power, convolve, convolve_direct, convolve_fft, cross_correlation_lhs, cross_correlation_lhs_direct,
    eval_transform, restrict_nonneg, TransformKind,
};
use whlab_core::LatticeDist;

fn law() -> impl Strategy<Value = LatticeDist> {
    (-6i64..=0, prop::collection::vec(0.0f64..1.0, 1..12)).prop_filter_map("zero law", |(lo, w)| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| LatticeDist::new(lo, w.iter().map(|v| v / total).collect()).unwrap())
    })
}

proptest! {
    #[test]
    fn convolution_commutes(a in law(), b in law()) {
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        prop_assert!(ab.sup_distance(&ba) <= 1e-15);
    }

    #[test]
    fn convolution_associates(a in law(), b in law(), c in law()) {
        let left = convolve(&convolve(&a, &b).unwrap(), &c).unwrap();
        let right = convolve(&a, &convolve(&b, &c).unwrap()).unwrap();
        prop_assert!(left.sup_distance(&right) <= 1e-14);
    }

    #[test]
    fn fft_matches_direct(a in law(), b in law()) {
        prop_assert!(convolve_fft(&a, &b).sup_distance(&convolve_direct(&a, &b)) <= 1e-12);
    }

    #[test]
    fn totals_multiply(a in law(), b in law()) {
        let c = convolve(&a, &b).unwrap();
        prop_assert!((c.total() - a.total() * b.total()).abs() <= 1e-14);
    }

    #[test]
    fn power_matches_characteristic_function(mu in law(), n in 1u32..8, t in 0.0f64..std::f64::consts::TAU) {
        // On |w| = 1 the transform is well conditioned, unlike s^k with s < 1
        // and negative k, which amplifies rounding at the far left sites.
        let p = convolution_power(&mu, n).unwrap();
        let lhs = eval_transform(&p, TransformKind::Characteristic, t).value;
        let rhs = eval_transform(&mu, TransformKind::Characteristic, t).value.powu(n);
        prop_assert!((lhs - rhs).norm() <= 1e-13);
    }

    #[test]
    fn power_matches_repeated_convolution(mu in law(), n in 1u32..6) {
        let mut repeated = mu.clone();
        for _ in 1..n {
            repeated = convolve(&repeated, &mu).unwrap();
        }
        prop_assert!(convolution_power(&mu, n).unwrap().sup_distance(&repeated) <= 1e-14);
    }

    #[test]
    fn half_line_correlation_matches_direct(mu in law(), n in 1i64..20) {
        let a = cross_correlation_lhs(&mu, n).unwrap();
        prop_assert!((a - cross_correlation_lhs_direct(&mu, n)).abs() <= 1e-12);
    }

    #[test]
    fn restriction_keeps_nonnegative_sites(mu in law()) {
        let r = restrict_nonneg(&mu);
        prop_assert!(r.min_support().is_none_or(|k| k >= 0));
        for k in 0..=mu.max_support().unwrap_or(0) {
            prop_assert_eq!(r.mass(k), mu.mass(k));
        }
    }
}

#[test]
fn rational_oracle_agrees() {
    let a = RationalDist::from_fractions(-2, &[(1, 7), (2, 7), (0, 1), (4, 7)]);
    let b = RationalDist::from_fractions(-1, &[(1, 3), (1, 6), (1, 2)]);
    let exact = convolve_exact(&a, &b);
    let fa = LatticeDist::new(a.offset, a.to_f64()).unwrap();
    let fb = LatticeDist::new(b.offset, b.to_f64()).unwrap();
    let approx = convolve(&fa, &fb).unwrap();
    for (i, w) in exact.to_f64().iter().enumerate() {
        assert_abs_diff_eq!(approx.mass(exact.offset + i as i64), *w, epsilon = 1e-16);
    }
}

#[test]
fn long_operands_take_the_fft_path_accurately() {
    let a = LatticeDist::uniform(-200, 200).unwrap();
    let b = LatticeDist::uniform(-150, 90).unwrap();
    let c = convolve(&a, &b).unwrap();
    assert!(c.sup_distance(&convolve_direct(&a, &b)) < 1e-12);
}

#[test]
fn corpus_laws_are_proper() {
    for mu in common::corpus(1, 50, 8) {
        assert!(mu.is_proper());
        assert!(mu.min_support().unwrap() < 0 && mu.max_support().unwrap() > 0);
    }
}
