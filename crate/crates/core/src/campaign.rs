//! Experiment drivers: the main comparison, the stale-state campaign, the
//! regime grid, the threshold sweep and the profile descriptor.
//!
//! A run is sequential in epoch order. Independent `(seed, system, slice)`
//! runs go through [`crate::par::map`], which preserves input order, so every
//! table is assembled in a fixed order regardless of scheduling.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audit::{AuditKind, AuditSink, MemoryAudit};
use crate::comparators::{run_variant, SystemVariant};
use crate::contract::{GateReason, Stage1Decision, Stage2Decision, TerminalDecision, ThresholdConfig, UseCase};
use crate::error::{Error, Result};
use crate::faults::{self, inject, FaultPlan, RegimeSlice};
use crate::metrics::{count, EpochOutcome, RunCounts, RunMetrics};
use crate::par;
use crate::rng::stream;
use crate::scenario::generator::{executor_for, generate_candidate, start_epoch};
use crate::scenario::kpi::{kpi_accumulate, KpiSummary};
use crate::scenario::preset::ScenarioPreset;
use crate::stats::{self, Interval, DEFAULT_RESAMPLES};

pub const DEFAULT_SEEDS: std::ops::RangeInclusive<u64> = 42..=51;
pub const MAIN_EPOCHS: u64 = 1000;
pub const STALE_EPOCHS: u64 = 500;
pub const COARSE_SEEDS: u64 = 3;
pub const COARSE_EPOCHS: u64 = 500;

#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub preset: &'a ScenarioPreset,
    pub config: &'a ThresholdConfig,
    pub system: SystemVariant,
    pub seed: u64,
    pub epochs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub system: SystemVariant,
    pub seed: u64,
    pub outcomes: Vec<EpochOutcome>,
    pub counts: RunCounts,
    pub metrics: RunMetrics,
    pub kpi: KpiSummary,
}

impl RunResult {
    pub fn terminals(&self) -> Vec<TerminalDecision> {
        self.outcomes.iter().map(|o| o.record.decision.terminal).collect()
    }
}

/// One seed of one system. The candidate stream depends only on
/// `(seed, epoch, preset)`, so every system sees the same intents.
pub fn run_seed(spec: &RunSpec<'_>, mut sink: Option<&mut dyn AuditSink>) -> RunResult {
    let uc = spec.preset.uc;
    let delta = spec.config.delta_epochs(uc.epoch_seconds());
    let start = start_epoch(spec.seed, spec.preset);
    let mut e = executor_for(spec.preset, spec.config.clone());
    let mut outcomes = Vec::with_capacity(spec.epochs as usize);
    for t in start..start + spec.epochs {
        let cand = generate_candidate(spec.seed, t, spec.preset, spec.config);
        let cand = inject(&spec.preset.faults, cand, spec.config);
        cand.prepare(&mut e);
        let reborrowed: Option<&mut dyn AuditSink> = match sink {
            Some(ref mut s) => Some(&mut **s),
            None => None,
        };
        let record = run_variant(spec.system, &cand, &mut e, spec.preset, reborrowed);
        let truth = cand.truth();
        let committed = record.committed();
        outcomes.push(EpochOutcome {
            would_be_safe: truth.would_be_safe,
            stale: cand.is_stale(delta),
            kpi: if committed { truth.if_committed } else { truth.if_idle },
            committed_action: committed.then(|| cand.intent.proposed_action.clone()),
            record,
        });
    }
    let counts = count(&outcomes);
    let kpi = kpi_accumulate(&outcomes.iter().map(|o| o.kpi).collect::<Vec<_>>(), uc);
    RunResult {
        system: spec.system,
        seed: spec.seed,
        metrics: RunMetrics::from_counts(&counts),
        counts,
        kpi,
        outcomes,
    }
}

/// All `(system, seed)` runs, grouped by system in `systems` order and by
/// seed in ascending order.
pub fn run_grid(
    preset: &ScenarioPreset,
    config: &ThresholdConfig,
    systems: &[SystemVariant],
    seeds: &[u64],
    epochs: u64,
) -> BTreeMap<SystemVariant, Vec<RunResult>> {
    let jobs: Vec<(SystemVariant, u64)> = systems
        .iter()
        .flat_map(|&s| seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let results = par::map(jobs, |(system, seed)| {
        run_seed(
            &RunSpec {
                preset,
                config,
                system,
                seed,
                epochs,
            },
            None,
        )
    });
    let mut out: BTreeMap<SystemVariant, Vec<RunResult>> = BTreeMap::new();
    for r in results {
        out.entry(r.system).or_default().push(r);
    }
    out
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, v.sqrt())
}

fn per_seed(runs: &[RunResult], f: impl Fn(&RunMetrics) -> Option<f64>) -> Vec<f64> {
    runs.iter().filter_map(|r| f(&r.metrics)).collect()
}

fn pooled(runs: &[RunResult]) -> RunCounts {
    let mut k = RunCounts::default();
    for r in runs {
        k.merge(&r.counts);
    }
    k
}

/// Seed-level mean and standard deviation of the headline metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRow {
    pub uc: UseCase,
    pub system: SystemVariant,
    pub seeds: usize,
    pub epochs: u64,
    pub ttfsa_ms: (f64, f64),
    pub bytes_per_commit: (f64, f64),
    pub unsafe_pct: (f64, f64),
    pub yield_pct: (f64, f64),
    pub c0_pct: (f64, f64),
    pub stale_rejection_pct: f64,
    pub upgrade_pct: f64,
    pub full_c2_coverage_pct: f64,
    pub stage2_branch_pct: f64,
    pub degraded_entries: u64,
    pub degraded_commits: u64,
    pub kpi: [(f64, f64); 3],
}

pub fn system_row(uc: UseCase, system: SystemVariant, runs: &[RunResult], epochs: u64) -> SystemRow {
    let pct = |f: fn(&RunMetrics) -> Option<f64>| -> Vec<f64> { per_seed(runs, f).iter().map(|x| 100.0 * x).collect() };
    let k = pooled(runs);
    let m = RunMetrics::from_counts(&k);
    let kpi_col = |f: fn(&KpiSummary) -> f64| mean_sd(&runs.iter().map(|r| f(&r.kpi)).collect::<Vec<_>>());
    SystemRow {
        uc,
        system,
        seeds: runs.len(),
        epochs,
        ttfsa_ms: mean_sd(&per_seed(runs, |m| m.ttfsa_mean_ms)),
        bytes_per_commit: mean_sd(&per_seed(runs, |m| m.bytes_per_commit)),
        unsafe_pct: mean_sd(&pct(|m| m.unsafe_rate)),
        yield_pct: mean_sd(&pct(|m| Some(m.yield_rate))),
        c0_pct: mean_sd(&pct(|m| m.c0_commit_share)),
        stale_rejection_pct: 100.0 * m.stale_rejection_rate.unwrap_or(f64::NAN),
        upgrade_pct: 100.0 * m.upgrade_freq,
        full_c2_coverage_pct: 100.0 * m.full_c2_coverage.unwrap_or(f64::NAN),
        stage2_branch_pct: 100.0 * m.stage2_branch_rate,
        degraded_entries: k.degraded_entries,
        degraded_commits: k.degraded_commits,
        kpi: [
            kpi_col(|k| k.primary),
            kpi_col(|k| k.secondary),
            kpi_col(|k| k.dtput_pct),
        ],
    }
}

/// Pairwise statistics of OURS against one comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub uc: UseCase,
    pub baseline: SystemVariant,
    /// Per-seed relative TTFSA change, percent (OURS minus baseline).
    pub ttfsa_pct: Option<Interval>,
    pub bytes_pct: Option<Interval>,
    pub unsafe_diff_pp: f64,
    pub unsafe_fisher_p: f64,
    pub unsafe_agresti_caffo_pp: (f64, f64),
    pub noninferiority: Option<stats::NonInferiority>,
}

fn rel_deltas(ours: &[RunResult], base: &[RunResult], f: fn(&RunMetrics) -> Option<f64>) -> Vec<f64> {
    ours.iter()
        .zip(base)
        .filter_map(|(o, b)| match (f(&o.metrics), f(&b.metrics)) {
            (Some(x), Some(y)) if y != 0.0 => Some(100.0 * (x - y) / y),
            _ => None,
        })
        .collect()
}

pub fn compare(uc: UseCase, ours: &[RunResult], base: &[RunResult], baseline: SystemVariant) -> Comparison {
    let label = |m: &str| format!("bootstrap/{uc}/{baseline}/{m}");
    let boot = |xs: &[f64], m: &str| stats::paired_bootstrap(xs, DEFAULT_RESAMPLES, &mut stream(0, 0, &label(m))).ok();
    let ko = pooled(ours);
    let kb = pooled(base);
    let rate = |k: &RunCounts| {
        if k.commits > 0 {
            k.unsafe_commits as f64 / k.commits as f64
        } else {
            0.0
        }
    };
    let (acl, ach) = stats::agresti_caffo(ko.unsafe_commits, ko.commits, kb.unsafe_commits, kb.commits, 0.95);
    let unsafe_pp: Vec<f64> = ours
        .iter()
        .zip(base)
        .filter_map(|(o, b)| Some(100.0 * (o.metrics.unsafe_rate? - b.metrics.unsafe_rate?)))
        .collect();
    Comparison {
        uc,
        baseline,
        ttfsa_pct: boot(&rel_deltas(ours, base, |m| m.ttfsa_mean_ms), "ttfsa"),
        bytes_pct: boot(&rel_deltas(ours, base, |m| m.bytes_per_commit), "bytes"),
        unsafe_diff_pp: 100.0 * (rate(&ko) - rate(&kb)),
        unsafe_fisher_p: stats::fisher_exact([
            [ko.unsafe_commits, ko.commits - ko.unsafe_commits],
            [kb.unsafe_commits, kb.commits - kb.unsafe_commits],
        ]),
        unsafe_agresti_caffo_pp: (100.0 * acl, 100.0 * ach),
        noninferiority: stats::noninferiority(&unsafe_pp, 0.5, DEFAULT_RESAMPLES, &mut stream(0, 0, &label("noninf")))
            .ok(),
    }
}

/// Element-wise decision identity and bitwise KPI identity of two systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub uc: UseCase,
    pub seeds: usize,
    pub epochs_compared: u64,
    pub decision_mismatches: u64,
    pub kpi_identical: bool,
}

pub fn identity(uc: UseCase, a: &[RunResult], b: &[RunResult]) -> IdentityCheck {
    let mut compared = 0;
    let mut mismatches = 0;
    let mut kpi_identical = a.len() == b.len();
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.outcomes.iter().zip(&y.outcomes) {
            compared += 1;
            mismatches += u64::from(p.record.decision.terminal != q.record.decision.terminal);
        }
        mismatches += x.outcomes.len().abs_diff(y.outcomes.len()) as u64;
        kpi_identical &= kpi_bits(&x.kpi) == kpi_bits(&y.kpi);
    }
    IdentityCheck {
        uc,
        seeds: a.len(),
        epochs_compared: compared,
        decision_mismatches: mismatches,
        kpi_identical,
    }
}

fn kpi_bits(k: &KpiSummary) -> [u64; 3] {
    [k.primary.to_bits(), k.secondary.to_bits(), k.dtput_pct.to_bits()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainReport {
    pub uc: UseCase,
    pub rows: Vec<SystemRow>,
    pub comparisons: Vec<Comparison>,
    pub identity: Option<IdentityCheck>,
}

pub fn run_main(
    preset: &ScenarioPreset,
    config: &ThresholdConfig,
    systems: &[SystemVariant],
    seeds: &[u64],
    epochs: u64,
) -> (MainReport, BTreeMap<SystemVariant, Vec<RunResult>>) {
    let uc = preset.uc;
    let runs = run_grid(preset, config, systems, seeds, epochs);
    let rows = systems.iter().map(|&s| system_row(uc, s, &runs[&s], epochs)).collect();
    let comparisons = match runs.get(&SystemVariant::Ours) {
        Some(ours) => systems
            .iter()
            .filter(|&&s| s != SystemVariant::Ours)
            .map(|&s| compare(uc, ours, &runs[&s], s))
            .collect(),
        None => Vec::new(),
    };
    let identity = match (runs.get(&SystemVariant::Ours), runs.get(&SystemVariant::FbInv)) {
        (Some(a), Some(b)) => Some(identity(uc, a, b)),
        _ => None,
    };
    (
        MainReport {
            uc,
            rows,
            comparisons,
            identity,
        },
        runs,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaleRow {
    pub uc: UseCase,
    pub system: SystemVariant,
    pub stale_candidates: u64,
    pub rejected: u64,
    pub rate_pct: f64,
    pub ci_low_pct: f64,
    pub ci_high_pct: f64,
}

/// Every epoch injected with a gap above δ; pooled rejection per system.
pub fn run_stale(
    preset: &ScenarioPreset,
    config: &ThresholdConfig,
    systems: &[SystemVariant],
    seeds: &[u64],
    epochs: u64,
) -> Vec<StaleRow> {
    let mut p = preset.clone();
    p.faults = FaultPlan {
        stale_gap: preset.faults.stale_gap,
        ..FaultPlan::stale_campaign()
    };
    let runs = run_grid(&p, config, systems, seeds, epochs);
    systems
        .iter()
        .map(|s| {
            let k = pooled(&runs[s]);
            let n = k.stale_candidates;
            let (lo, hi) = if n > 0 {
                stats::clopper_pearson(k.stale_rejected, n, 0.95)
            } else {
                (f64::NAN, f64::NAN)
            };
            StaleRow {
                uc: preset.uc,
                system: *s,
                stale_candidates: n,
                rejected: k.stale_rejected,
                rate_pct: if n > 0 {
                    100.0 * k.stale_rejected as f64 / n as f64
                } else {
                    f64::NAN
                },
                ci_low_pct: 100.0 * lo,
                ci_high_pct: 100.0 * hi,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeMode {
    Coarse,
    Dense,
}

impl std::str::FromStr for RegimeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "coarse" => Ok(Self::Coarse),
            "dense" => Ok(Self::Dense),
            _ => Err(Error::InvalidConfig(format!("unknown regime mode {s:?}"))),
        }
    }
}

impl RegimeMode {
    /// `(seeds, epochs)` per slice.
    pub fn resolution(self) -> (u64, u64) {
        match self {
            RegimeMode::Coarse => (COARSE_SEEDS, COARSE_EPOCHS),
            RegimeMode::Dense => (10, MAIN_EPOCHS),
        }
    }

    pub fn slices(self) -> Vec<RegimeSlice> {
        match self {
            RegimeMode::Coarse => faults::coarse_grid(),
            RegimeMode::Dense => faults::dense_grid(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ref,
    Material,
    Nonzero,
    Null,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Ref => "ref.",
            Verdict::Material => "material",
            Verdict::Nonzero => "nonzero",
            Verdict::Null => "n.s.",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub uc: UseCase,
    pub slice: String,
    pub ours_fb_ttfsa_pct: Option<Interval>,
    pub ours_fb_bytes_pct: Option<Interval>,
    pub ours_st_ttfsa_pct: Option<Interval>,
    pub stage2_branch_pct: f64,
    /// Per-seed OURS minus ST-INV TTFSA, milliseconds.
    pub ours_st_delta_ms: Vec<f64>,
    pub dod: Option<stats::DodResult>,
    pub verdict: Verdict,
}

/// The benign reference is always evaluated, even when not listed.
pub fn run_regime(
    preset: &ScenarioPreset,
    config: &ThresholdConfig,
    slices: &[RegimeSlice],
    seeds: &[u64],
    epochs: u64,
) -> Vec<RegimeRow> {
    let systems = [SystemVariant::Ours, SystemVariant::FbInv, SystemVariant::StInv];
    let mut all: Vec<RegimeSlice> = Vec::new();
    if !slices.iter().any(|s| s.name == faults::BENIGN) {
        all.extend(faults::find_slice(faults::BENIGN));
    }
    all.extend(slices.iter().cloned());

    let jobs: Vec<(usize, SystemVariant, u64)> = (0..all.len())
        .flat_map(|i| {
            systems
                .iter()
                .flat_map(move |&s| seeds.iter().map(move |&seed| (i, s, seed)))
        })
        .collect();
    let presets: Vec<ScenarioPreset> = all
        .iter()
        .map(|s| ScenarioPreset {
            name: s.name.clone(),
            faults: s.plan,
            ..preset.clone()
        })
        .collect();
    let results = par::map(jobs, |(i, system, seed)| {
        let r = run_seed(
            &RunSpec {
                preset: &presets[i],
                config,
                system,
                seed,
                epochs,
            },
            None,
        );
        (i, r.system, r.metrics, r.counts)
    });

    let uc = preset.uc;
    let mut grouped: BTreeMap<(usize, SystemVariant), Vec<(RunMetrics, RunCounts)>> = BTreeMap::new();
    for (i, s, m, k) in results {
        grouped.entry((i, s)).or_default().push((m, k));
    }
    let ttfsa = |i: usize, s: SystemVariant| -> Vec<f64> {
        grouped[&(i, s)]
            .iter()
            .map(|(m, _)| m.ttfsa_mean_ms.unwrap_or(f64::NAN))
            .collect()
    };
    let bytes = |i: usize, s: SystemVariant| -> Vec<f64> {
        grouped[&(i, s)]
            .iter()
            .map(|(m, _)| m.bytes_per_commit.unwrap_or(f64::NAN))
            .collect()
    };
    let rel = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 100.0 * (x - y) / y).collect() };
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x - y).collect() };
    let boot =
        |xs: &[f64], label: String| stats::paired_bootstrap(xs, DEFAULT_RESAMPLES, &mut stream(0, 0, &label)).ok();

    let benign_idx = all
        .iter()
        .position(|s| s.name == faults::BENIGN)
        .expect("benign slice present");
    let benign_delta = diff(
        &ttfsa(benign_idx, SystemVariant::Ours),
        &ttfsa(benign_idx, SystemVariant::StInv),
    );

    all.iter()
        .enumerate()
        .filter(|(i, s)| *i != benign_idx || slices.iter().any(|x| x.name == s.name))
        .map(|(i, s)| {
            let ours = ttfsa(i, SystemVariant::Ours);
            let st_delta = diff(&ours, &ttfsa(i, SystemVariant::StInv));
            let gated: u64 = grouped[&(i, SystemVariant::Ours)].iter().map(|(_, k)| k.gated).sum();
            let n: u64 = grouped[&(i, SystemVariant::Ours)].iter().map(|(_, k)| k.epochs).sum();
            let tag = |m: &str| format!("regime/{uc}/{}/{m}", s.name);
            let (dod, verdict) = if i == benign_idx {
                (None, Verdict::Ref)
            } else {
                let d = stats::dod_detector(
                    &st_delta,
                    &benign_delta,
                    DEFAULT_RESAMPLES,
                    &mut stream(0, 0, &tag("dod")),
                )
                .ok();
                let v = match d {
                    Some(d) if d.material => Verdict::Material,
                    Some(d) if d.dod.excludes_zero() => Verdict::Nonzero,
                    _ => Verdict::Null,
                };
                (d, v)
            };
            RegimeRow {
                uc,
                slice: s.name.clone(),
                ours_fb_ttfsa_pct: boot(&rel(&ours, &ttfsa(i, SystemVariant::FbInv)), tag("fb-ttfsa")),
                ours_fb_bytes_pct: boot(
                    &rel(&bytes(i, SystemVariant::Ours), &bytes(i, SystemVariant::FbInv)),
                    tag("fb-bytes"),
                ),
                ours_st_ttfsa_pct: boot(&rel(&ours, &ttfsa(i, SystemVariant::StInv)), tag("st-ttfsa")),
                stage2_branch_pct: 100.0 * gated as f64 / n.max(1) as f64,
                ours_st_delta_ms: st_delta,
                dod,
                verdict,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub tau_commit: f64,
    pub ttfsa_ms: f64,
    pub unsafe_pct: f64,
    pub yield_pct: f64,
    pub c0_pct: f64,
}

/// The τ_commit grid `[0.10, 0.50]` in steps of 0.05.
pub fn tau_grid() -> Vec<f64> {
    (0..=8).map(|i| ((10 + 5 * i) as f64) / 100.0).collect()
}

/// Sweeps τ_commit for OURS with every other threshold held fixed. The sweep
/// deliberately leaves the threshold-ordering check off: the top of the grid
/// meets τ_degraded.
pub fn run_sensitivity(
    preset: &ScenarioPreset,
    config: &ThresholdConfig,
    taus: &[f64],
    seeds: &[u64],
    epochs: u64,
) -> Vec<SensitivityRow> {
    let configs: Vec<ThresholdConfig> = taus
        .iter()
        .map(|&tau| ThresholdConfig {
            tau_commit: tau,
            ..config.clone()
        })
        .collect();
    let jobs: Vec<(usize, u64)> = (0..taus.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results = par::map(jobs, |(i, seed)| {
        let r = run_seed(
            &RunSpec {
                preset,
                config: &configs[i],
                system: SystemVariant::Ours,
                seed,
                epochs,
            },
            None,
        );
        (i, r.counts)
    });
    let mut pooled_counts = vec![RunCounts::default(); taus.len()];
    for (i, k) in results {
        pooled_counts[i].merge(&k);
    }
    taus.iter()
        .zip(pooled_counts)
        .map(|(&tau, k)| {
            let m = RunMetrics::from_counts(&k);
            SensitivityRow {
                tau_commit: tau,
                ttfsa_ms: m.ttfsa_mean_ms.unwrap_or(f64::NAN),
                unsafe_pct: 100.0 * m.unsafe_rate.unwrap_or(f64::NAN),
                yield_pct: 100.0 * m.yield_rate,
                c0_pct: 100.0 * m.c0_commit_share.unwrap_or(f64::NAN),
            }
        })
        .collect()
}

/// Replays one seed with an audit sink attached and returns the terminal
/// decisions with and without it alongside the collected entries.
pub fn audit_replay(spec: &RunSpec<'_>) -> (RunResult, RunResult, MemoryAudit) {
    let mut store = MemoryAudit::default();
    let with = run_seed(spec, Some(&mut store));
    let without = run_seed(spec, None);
    (with, without, store)
}

pub const PROFILE_ID: &str = "wireless-supervisory-control-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRole {
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileLayers {
    #[serde(rename = "C0")]
    pub c0: LayerRole,
    #[serde(rename = "C1")]
    pub c1: LayerRole,
    #[serde(rename = "C2")]
    pub c2: LayerRole,
}

/// The agent-profile extension descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ProfileDescriptor {
    pub profile_id: String,
    pub layers: ProfileLayers,
    pub statemachine: String,
}

impl ProfileDescriptor {
    pub fn standard() -> Self {
        let role = |r: &str| LayerRole { role: r.to_string() };
        Self {
            profile_id: PROFILE_ID.to_string(),
            layers: ProfileLayers {
                c0: role("required"),
                c1: role("fetchable"),
                c2: role("fetchable"),
            },
            statemachine: "commit-gate-reject".to_string(),
        }
    }

    /// Structural check on top of the typed shape.
    pub fn validate(&self) -> Result<()> {
        let allowed = ["required", "fetchable"];
        let layers = [&self.layers.c0, &self.layers.c1, &self.layers.c2];
        if self.profile_id.is_empty() || layers.iter().any(|l| !allowed.contains(&l.role.as_str())) {
            return Err(Error::InvalidConfig(
                "profile descriptor has an invalid layer role".into(),
            ));
        }
        if self.layers.c0.role != "required" {
            return Err(Error::InvalidConfig("C0 must be required".into()));
        }
        if self.statemachine != "commit-gate-reject" {
            return Err(Error::InvalidConfig("unknown state machine".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(s)?;
        d.validate()?;
        Ok(d)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("descriptor serializes") + "\n"
    }
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.4}")
    }
}

fn fmt_ci(ci: &Option<Interval>) -> [String; 3] {
    match ci {
        Some(c) => [fmt_f(c.mean), fmt_f(c.low), fmt_f(c.high)],
        None => [String::new(), String::new(), String::new()],
    }
}

pub const MAIN_HEADER: [&str; 20] = [
    "uc",
    "system",
    "seeds",
    "epochs",
    "ttfsa_ms",
    "ttfsa_ms_sd",
    "bytes_per_commit",
    "bytes_per_commit_sd",
    "unsafe_pct",
    "unsafe_pct_sd",
    "yield_pct",
    "yield_pct_sd",
    "c0_pct",
    "c0_pct_sd",
    "stale_rejection_pct",
    "upgrade_pct",
    "full_c2_coverage_pct",
    "stage2_branch_pct",
    "degraded_entries",
    "degraded_commits",
];

pub fn write_main_csv(path: &Path, rows: &[SystemRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MAIN_HEADER)?;
    for r in rows {
        let mut rec = vec![
            r.uc.to_string(),
            r.system.to_string(),
            r.seeds.to_string(),
            r.epochs.to_string(),
        ];
        for (m, s) in [r.ttfsa_ms, r.bytes_per_commit, r.unsafe_pct, r.yield_pct, r.c0_pct] {
            rec.push(fmt_f(m));
            rec.push(fmt_f(s));
        }
        rec.extend([
            fmt_f(r.stale_rejection_pct),
            fmt_f(r.upgrade_pct),
            fmt_f(r.full_c2_coverage_pct),
            fmt_f(r.stage2_branch_pct),
            r.degraded_entries.to_string(),
            r.degraded_commits.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn kpi_header(uc: UseCase) -> Vec<String> {
    let mut h = vec!["uc".to_string(), "system".to_string()];
    for c in KpiSummary::column_names(uc) {
        h.push(c.to_string());
        h.push(format!("{c}_sd"));
    }
    h
}

pub fn write_kpi_csv(path: &Path, uc: UseCase, rows: &[SystemRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(kpi_header(uc))?;
    for r in rows {
        let mut rec = vec![r.uc.to_string(), r.system.to_string()];
        for (m, s) in r.kpi {
            rec.push(fmt_f(m));
            rec.push(fmt_f(s));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const STALE_HEADER: [&str; 7] = [
    "uc",
    "system",
    "stale_candidates",
    "rejected",
    "rate_pct",
    "ci_low_pct",
    "ci_high_pct",
];

pub fn write_stale_csv(path: &Path, rows: &[StaleRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(STALE_HEADER)?;
    for r in rows {
        w.write_record([
            r.uc.to_string(),
            r.system.to_string(),
            r.stale_candidates.to_string(),
            r.rejected.to_string(),
            fmt_f(r.rate_pct),
            fmt_f(r.ci_low_pct),
            fmt_f(r.ci_high_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const REGIME_HEADER: [&str; 16] = [
    "uc",
    "slice",
    "ours_fb_ttfsa_pct",
    "ours_fb_ttfsa_ci_low",
    "ours_fb_ttfsa_ci_high",
    "ours_fb_bytes_pct",
    "ours_fb_bytes_ci_low",
    "ours_fb_bytes_ci_high",
    "ours_st_ttfsa_pct",
    "ours_st_ttfsa_ci_low",
    "ours_st_ttfsa_ci_high",
    "stage2_branch_pct",
    "dod_mean_ms",
    "dod_ci_low_ms",
    "dod_ci_high_ms",
    "verdict",
];

pub fn write_regime_csv(path: &Path, rows: &[RegimeRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REGIME_HEADER)?;
    for r in rows {
        let mut rec = vec![r.uc.to_string(), r.slice.clone()];
        rec.extend(fmt_ci(&r.ours_fb_ttfsa_pct));
        rec.extend(fmt_ci(&r.ours_fb_bytes_pct));
        rec.extend(fmt_ci(&r.ours_st_ttfsa_pct));
        rec.push(fmt_f(r.stage2_branch_pct));
        rec.extend(fmt_ci(&r.dod.map(|d| d.dod)));
        rec.push(r.verdict.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub const SENSITIVITY_HEADER: [&str; 5] = ["tau_commit", "ttfsa_ms", "unsafe_pct", "yield_pct", "c0_pct"];

pub fn write_sensitivity_csv(path: &Path, rows: &[SensitivityRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SENSITIVITY_HEADER)?;
    for r in rows {
        w.write_record([
            format!("{:.2}", r.tau_commit),
            fmt_f(r.ttfsa_ms),
            fmt_f(r.unsafe_pct),
            fmt_f(r.yield_pct),
            fmt_f(r.c0_pct),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// One decision record per line, runs in map order. `unsafe_label` is null
/// for epochs that did not commit.
pub fn write_decisions_jsonl(path: &Path, runs: &BTreeMap<SystemVariant, Vec<RunResult>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for results in runs.values() {
        for r in results {
            for o in &r.outcomes {
                serde_json::to_writer(&mut w, &DecisionLine::new(r.system, r.seed, o))?;
                w.write_all(b"\n")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// The flat per-decision log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionLine {
    pub seed: u64,
    pub epoch: u64,
    pub uc: UseCase,
    pub system: SystemVariant,
    pub stage1: Stage1Decision,
    pub gate_reason: GateReason,
    pub stage2: Option<Stage2Decision>,
    pub terminal: TerminalDecision,
    pub degraded: bool,
    pub r_local: Option<f64>,
    pub bytes_charged: u64,
    pub latency_ms: f64,
    pub path_trace: Vec<String>,
    pub unsafe_label: Option<bool>,
    pub audit_kind: AuditKind,
}

impl DecisionLine {
    pub fn new(system: SystemVariant, seed: u64, o: &EpochOutcome) -> Self {
        let r = &o.record;
        let d = &r.decision;
        Self {
            seed,
            epoch: r.epoch,
            uc: r.intent_type.use_case(),
            system,
            stage1: d.stage1,
            gate_reason: d.gate_reason,
            stage2: d.stage2,
            terminal: d.terminal,
            degraded: d.degraded,
            r_local: r.r_local,
            bytes_charged: r.bytes_charged,
            latency_ms: r.latency_ms,
            path_trace: r.path_trace.clone(),
            unsafe_label: r.committed().then_some(!o.would_be_safe),
            audit_kind: r.audit_kind,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_grid_endpoints() {
        let g = tau_grid();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], 0.10);
        assert_eq!(g[8], 0.50);
    }

    #[test]
    fn profile_round_trip() {
        let d = ProfileDescriptor::standard();
        let json = d.to_json();
        assert!(json.contains("commit-gate-reject"));
        assert_eq!(ProfileDescriptor::from_json_str(&json).unwrap(), d);
    }

    #[test]
    fn same_seed_same_run() {
        let preset = ScenarioPreset::benign(UseCase::Uc2);
        let cfg = ThresholdConfig::uc2();
        let spec = RunSpec {
            preset: &preset,
            config: &cfg,
            system: SystemVariant::Ours,
            seed: 42,
            epochs: 50,
        };
        assert_eq!(run_seed(&spec, None), run_seed(&spec, None));
    }
}
