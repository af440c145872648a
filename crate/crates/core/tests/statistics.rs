//! Statistics routines against independent oracles.

mod common;

use proptest::prelude::*;

use intentgate::rng::stream;
use intentgate::stats::{agresti_caffo, clopper_pearson, dod_detector, fisher_exact, noninferiority, paired_bootstrap};
use intentgate::verifiers::jain_index;

fn ln_choose(n: u64, k: u64) -> f64 {
    let lf = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
    lf(n) - lf(k) - lf(n - k)
}

fn binom_pmf(n: u64, k: u64, p: f64) -> f64 {
    if p == 0.0 {
        return f64::from(u8::from(k == 0));
    }
    if p == 1.0 {
        return f64::from(u8::from(k == n));
    }
    (ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

proptest! {
    #[test]
    fn jain_is_bounded(xs in prop::collection::vec(0.0f64..100.0, 1..12)) {
        prop_assume!(xs.iter().any(|&x| x > 1e-9));
        let j = jain_index(&xs).unwrap();
        let n = xs.len() as f64;
        prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0 + 1e-12);
    }

    #[test]
    fn jain_ignores_scale_and_order(xs in prop::collection::vec(0.01f64..100.0, 1..12), k in 0.01f64..100.0) {
        let j = jain_index(&xs).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * k).collect();
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert!((jain_index(&scaled).unwrap() - j).abs() < 1e-12);
        prop_assert!((jain_index(&rev).unwrap() - j).abs() < 1e-12);
    }

    #[test]
    fn fisher_symmetries(a in 0u64..25, b in 0u64..25, c in 0u64..25, d in 0u64..25) {
        let p = fisher_exact([[a, b], [c, d]]);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((fisher_exact([[a, c], [b, d]]) - p).abs() < 1e-12);
        prop_assert!((fisher_exact([[c, d], [a, b]]) - p).abs() < 1e-12);
        prop_assert!((fisher_exact([[b, a], [d, c]]) - p).abs() < 1e-12);
    }

    #[test]
    fn fisher_matches_enumeration_beyond_30(a in 0u64..30, b in 0u64..30, c in 0u64..30, d in 0u64..30) {
        let t = [[a, b], [c, d]];
        prop_assert!((fisher_exact(t) - common::fisher_brute(t)).abs() < 1e-9);
    }

    #[test]
    fn cp_brackets_and_nests(n in 1u64..400, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).round() as u64;
        let (lo95, hi95) = clopper_pearson(k, n, 0.95);
        let (lo99, hi99) = clopper_pearson(k, n, 0.99);
        let phat = k as f64 / n as f64;
        prop_assert!(lo95 <= phat && phat <= hi95);
        prop_assert!(lo99 <= lo95 + 1e-12 && hi95 <= hi99 + 1e-12);
    }
}

#[test]
fn fisher_on_all_small_tables() {
    for n in 0..=30u64 {
        for a in 0..=n {
            for b in 0..=n - a {
                for c in 0..=n - a - b {
                    let t = [[a, b], [c, n - a - b - c]];
                    assert!((fisher_exact(t) - common::fisher_brute(t)).abs() < 1e-9, "{t:?}");
                }
            }
        }
    }
}

#[test]
fn fisher_equal_tables_are_one() {
    for k in 0..20 {
        assert_eq!(fisher_exact([[k, 1000 - k], [k, 1000 - k]]), 1.0);
    }
}

#[test]
fn fisher_published_value() {
    let p = fisher_exact([[1, 9], [9, 1]]);
    assert!((p - common::fisher_brute([[1, 9], [9, 1]])).abs() < 1e-12);
    assert!((p - 0.0011).abs() < 5e-5, "{p}");
}

/// Exact coverage: the probability, under Binomial(n, p), that the interval
/// drawn from the observed count contains p.
#[test]
fn cp_coverage_is_conservative() {
    for n in [5u64, 20, 60] {
        let intervals: Vec<(f64, f64)> = (0..=n).map(|k| clopper_pearson(k, n, 0.95)).collect();
        for i in 1..50 {
            let p = i as f64 / 50.0;
            let coverage: f64 = (0..=n)
                .filter(|&k| intervals[k as usize].0 <= p && p <= intervals[k as usize].1)
                .map(|k| binom_pmf(n, k, p))
                .sum();
            assert!(coverage >= 0.95 - 1e-9, "n={n} p={p} coverage={coverage}");
        }
    }
}

#[test]
fn cp_acceptance_value() {
    let (lo, hi) = clopper_pearson(5000, 5000, 0.95);
    assert!((lo - 0.99926).abs() <= 1e-5);
    assert_eq!(hi, 1.0);
    assert_eq!(lo, 0.025f64.powf(1.0 / 5000.0));
    let (lo, hi) = clopper_pearson(0, 1, 0.95);
    assert_eq!(lo, 0.0);
    assert!((hi - 0.975).abs() < 1e-12);
}

#[test]
fn agresti_caffo_hand_evaluation() {
    let (lo, hi) = agresti_caffo(30, 1000, 32, 1000, 0.95);
    let p1: f64 = 31.0 / 1002.0;
    let p2: f64 = 33.0 / 1002.0;
    let se = (p1 * (1.0 - p1) / 1002.0 + p2 * (1.0 - p2) / 1002.0).sqrt();
    let z = 1.959_963_984_540_054;
    assert!((lo - (p1 - p2 - z * se)).abs() < 1e-9);
    assert!((hi - (p1 - p2 + z * se)).abs() < 1e-9);
    let (lo, hi) = agresti_caffo(0, 10, 0, 10, 0.95);
    assert!(lo.is_finite() && hi.is_finite() && lo < 0.0 && hi > 0.0);
}

#[test]
fn bootstrap_all_negative_stays_negative() {
    let deltas = [-31.0, -28.5, -35.2, -30.1, -29.9, -33.3, -27.0, -32.4, -30.8, -34.0];
    let ci = paired_bootstrap(&deltas, 10_000, &mut stream(3, 0, "t")).unwrap();
    assert!(ci.high < 0.0 && ci.low <= ci.mean && ci.mean <= ci.high);
}

#[test]
fn noninferiority_examples() {
    let near: Vec<f64> = [0.02, 0.10, 0.05, 0.08, 0.01, 0.09, 0.06, 0.04, 0.07, 0.08].to_vec();
    let ni = noninferiority(&near, 0.5, 10_000, &mut stream(4, 0, "t")).unwrap();
    assert!(ni.pass && ni.upper > 0.0 && ni.upper < 0.2, "{ni:?}");
    let shifted: Vec<f64> = near.iter().map(|d| d + 0.95).collect();
    assert!(
        !noninferiority(&shifted, 0.5, 10_000, &mut stream(4, 0, "t"))
            .unwrap()
            .pass
    );
}

#[test]
fn dod_materiality() {
    let benign = [
        -250.0, -260.0, -240.0, -255.0, -245.0, -250.0, -252.0, -248.0, -251.0, -249.0,
    ];
    let plus = |s: f64| -> Vec<f64> {
        benign
            .iter()
            .enumerate()
            .map(|(i, b)| b + s + (i % 3) as f64 * 0.5)
            .collect()
    };
    let big = dod_detector(&plus(50.0), &benign, 10_000, &mut stream(5, 0, "t")).unwrap();
    assert!(big.material && big.dod.mean > 0.0);
    let small = dod_detector(&plus(8.0), &benign, 10_000, &mut stream(5, 0, "t")).unwrap();
    assert!(small.dod.excludes_zero() && !small.material);
}
