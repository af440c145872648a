//! Statistical procedures: paired percentile bootstrap, exact binomial and
//! 2×2 tests, the add-one difference interval, non-inferiority and the
//! delta-of-deltas materiality detector.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::rng::StreamRng;

pub const DEFAULT_RESAMPLES: usize = 10_000;
/// Materiality floor for the delta-of-deltas detector, milliseconds.
pub const DOD_FLOOR_MS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn excludes_zero(&self) -> bool {
        self.low > 0.0 || self.high < 0.0
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolated quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Sorted means of `resamples` with-replacement resamples.
fn bootstrap_means(xs: &[f64], resamples: usize, rng: &mut StreamRng) -> Vec<f64> {
    let n = xs.len();
    let mut out: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

fn need_seeds(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::InsufficientSeeds {
            needed: 2,
            got: xs.len(),
        });
    }
    Ok(())
}

/// 95% percentile bootstrap over per-seed values.
pub fn paired_bootstrap(deltas: &[f64], resamples: usize, rng: &mut StreamRng) -> Result<Interval> {
    need_seeds(deltas)?;
    let means = bootstrap_means(deltas, resamples, rng);
    Ok(Interval {
        mean: mean(deltas),
        low: quantile(&means, 0.025),
        high: quantile(&means, 0.975),
    })
}

/// Exact binomial interval. Boundary cases use their closed forms.
pub fn clopper_pearson(k: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(n >= 1 && k <= n, "clopper_pearson needs 0 <= k <= n, n >= 1");
    let alpha = 1.0 - level;
    let nf = n as f64;
    let kf = k as f64;
    let low = if k == 0 {
        0.0
    } else if k == n {
        (alpha / 2.0).powf(1.0 / nf)
    } else {
        Beta::new(kf, nf - kf + 1.0).map_or(0.0, |b| b.inverse_cdf(alpha / 2.0))
    };
    let high = if k == n {
        1.0
    } else if k == 0 {
        1.0 - (alpha / 2.0).powf(1.0 / nf)
    } else {
        Beta::new(kf + 1.0, nf - kf).map_or(1.0, |b| b.inverse_cdf(1.0 - alpha / 2.0))
    };
    (low, high)
}

/// Two-sided Fisher exact p for `[[a, b], [c, d]]`: the total probability of
/// tables with the same margins no more likely than the observed one.
pub fn fisher_exact(t: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = t;
    let r1 = a + b;
    let c1 = a + c;
    let n = a + b + c + d;
    if n == 0 {
        return 1.0;
    }
    let ln_total = ln_binomial(n, c1);
    let pmf = |x: u64| (ln_binomial(r1, x) + ln_binomial(n - r1, c1 - x) - ln_total).exp();
    let lo = c1.saturating_sub(n - r1);
    let hi = r1.min(c1);
    let p_obs = pmf(a);
    let tol = p_obs * 1e-7;
    let mut p = 0.0;
    let mut any_more_likely = false;
    for x in lo..=hi {
        let px = pmf(x);
        if px <= p_obs + tol {
            p += px;
        } else {
            any_more_likely = true;
        }
    }
    if any_more_likely {
        p.min(1.0)
    } else {
        1.0
    }
}

/// Add-one adjusted Wald interval for `p1 − p2`.
pub fn agresti_caffo(k1: u64, n1: u64, k2: u64, n2: u64, level: f64) -> (f64, f64) {
    let p1 = (k1 as f64 + 1.0) / (n1 as f64 + 2.0);
    let p2 = (k2 as f64 + 1.0) / (n2 as f64 + 2.0);
    let se = (p1 * (1.0 - p1) / (n1 as f64 + 2.0) + p2 * (1.0 - p2) / (n2 as f64 + 2.0)).sqrt();
    let z = z_quantile(1.0 - (1.0 - level) / 2.0);
    let d = p1 - p2;
    (d - z * se, d + z * se)
}

fn z_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonInferiority {
    pub mean: f64,
    /// 95% one-sided upper bound.
    pub upper: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Seed-level cluster bootstrap; passes iff the one-sided upper bound sits
/// below the margin.
pub fn noninferiority(deltas_pp: &[f64], margin: f64, resamples: usize, rng: &mut StreamRng) -> Result<NonInferiority> {
    need_seeds(deltas_pp)?;
    let means = bootstrap_means(deltas_pp, resamples, rng);
    let upper = quantile(&means, 0.95);
    Ok(NonInferiority {
        mean: mean(deltas_pp),
        upper,
        margin,
        pass: upper < margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DodResult {
    pub dod: Interval,
    pub material: bool,
}

/// Paired delta-of-deltas. Positive means the slice's delta sits above the
/// reference delta, i.e. the advantage compressed.
pub fn dod_detector(
    slice_deltas: &[f64],
    benign_deltas: &[f64],
    resamples: usize,
    rng: &mut StreamRng,
) -> Result<DodResult> {
    if slice_deltas.len() != benign_deltas.len() {
        return Err(Error::InvalidConfig("delta-of-deltas needs paired seeds".into()));
    }
    let paired: Vec<f64> = slice_deltas.iter().zip(benign_deltas).map(|(s, b)| s - b).collect();
    let dod = paired_bootstrap(&paired, resamples, rng)?;
    Ok(DodResult {
        dod,
        material: dod.excludes_zero() && dod.mean.abs() >= DOD_FLOOR_MS,
    })
}
