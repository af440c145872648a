//! Comparator pipelines, byte accounting and shipped configuration, run
//! end to end on short campaigns.

use std::path::PathBuf;

use rand::SeedableRng;

use intentgate::campaign::{self, DecisionLine, RunResult, RunSpec};
use intentgate::comparators::SystemVariant;
use intentgate::contract::{ThresholdConfig, UseCase, C0_BYTES, C1_BYTES};
use intentgate::faults::{campaign_preset, CAMPAIGN_PRESETS};
use intentgate::scenario::ScenarioPreset;
use intentgate::verifiers::LatencyModel;

const SEEDS: [u64; 4] = [42, 43, 44, 45];
const EPOCHS: u64 = 400;

fn runs(uc: UseCase, systems: &[SystemVariant]) -> std::collections::BTreeMap<SystemVariant, Vec<RunResult>> {
    let preset = ScenarioPreset::benign(uc);
    campaign::run_main(&preset, &ThresholdConfig::for_use_case(uc), systems, &SEEDS, EPOCHS).1
}

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn fb_inv_mirrors_ours_at_full_cost() {
    for uc in [UseCase::Uc1, UseCase::Uc2] {
        let r = runs(uc, &[SystemVariant::Ours, SystemVariant::FbInv]);
        for (ours, fb) in r[&SystemVariant::Ours].iter().zip(&r[&SystemVariant::FbInv]) {
            assert_eq!(ours.terminals(), fb.terminals());
            assert_eq!(ours.kpi, fb.kpi);
            assert_eq!(fb.counts.c0_commits, 0);
            assert!(ours.counts.c0_commits > 0);
            assert!(fb.metrics.bytes_per_commit > ours.metrics.bytes_per_commit);
            assert!(fb.metrics.ttfsa_mean_ms > ours.metrics.ttfsa_mean_ms);
        }
    }
}

#[test]
fn type_only_risk_commits_less_at_stage1() {
    for uc in [UseCase::Uc1, UseCase::Uc2] {
        let r = runs(uc, &[SystemVariant::Ours, SystemVariant::StInv]);
        let share = |s: SystemVariant| {
            let (c0, all) = r[&s]
                .iter()
                .fold((0, 0), |(a, b), x| (a + x.counts.c0_commits, b + x.counts.commits));
            c0 as f64 / all as f64
        };
        assert!(share(SystemVariant::StInv) < share(SystemVariant::Ours));
    }
}

#[test]
fn single_stage_baselines_never_fetch() {
    let r = runs(
        UseCase::Uc1,
        &[SystemVariant::C0Only, SystemVariant::Bl4Legacy, SystemVariant::Ab1NoC1],
    );
    for (s, results) in &r {
        for x in results {
            assert_eq!(x.counts.c1_fetches, 0, "{s}");
            assert_eq!(x.metrics.ttfsa_mean_ms, Some(10.0), "{s}");
        }
    }
    for x in &r[&SystemVariant::C0Only] {
        assert_eq!(x.counts.c0_commits, x.counts.commits);
        assert_eq!(x.counts.full_c2_commits, 0);
    }
}

#[test]
fn dropping_the_staleness_guard_collapses_rejection() {
    let uc = UseCase::Uc2;
    let rows = campaign::run_stale(
        &ScenarioPreset::benign(uc),
        &ThresholdConfig::for_use_case(uc),
        &[SystemVariant::Ours, SystemVariant::Ab2NoWireless],
        &SEEDS,
        200,
    );
    assert_eq!(rows[0].rate_pct, 100.0);
    assert!(rows[1].rate_pct < 50.0, "{}", rows[1].rate_pct);
}

#[test]
fn encodings_stay_in_band_under_stress() {
    for uc in [UseCase::Uc1, UseCase::Uc2] {
        let cfg = ThresholdConfig::for_use_case(uc);
        for name in ["benign", "conflict_high", "composite_severe"] {
            let preset = campaign_preset(uc, name).unwrap();
            for system in [SystemVariant::Ours, SystemVariant::FbInv] {
                let r = campaign::run_seed(
                    &RunSpec {
                        preset: &preset,
                        config: &cfg,
                        system,
                        seed: 42,
                        epochs: EPOCHS,
                    },
                    None,
                );
                for o in &r.outcomes {
                    let rec = &o.record;
                    let c0 = rec.c0_bytes as usize;
                    assert!((C0_BYTES.0..=C0_BYTES.1).contains(&c0), "{uc} {name} C0 {c0}");
                    if rec.c1_fetched {
                        let c1 = rec.c1_bytes as usize;
                        assert!((C1_BYTES.0..=C1_BYTES.1).contains(&c1), "{uc} {name} C1 {c1}");
                    }
                }
            }
        }
    }
}

#[test]
fn eager_latency_mean_is_calibrated() {
    let model = LatencyModel::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mean = (0..n).map(|_| model.quorum_latency(&mut rng)).sum::<f64>() / n as f64;
    assert!((1700.0..=1900.0).contains(&mean), "{mean}");
}

#[test]
fn shipped_configs_match_builtins() {
    let dir = configs_dir();
    for uc in [UseCase::Uc1, UseCase::Uc2] {
        let loaded = ThresholdConfig::load(&dir.join(format!("{uc}.json"))).unwrap();
        assert_eq!(loaded, ThresholdConfig::for_use_case(uc));
        for name in CAMPAIGN_PRESETS {
            let p = ScenarioPreset::load(&dir.join(format!("presets/{uc}_{name}.json"))).unwrap();
            assert_eq!(p, campaign_preset(uc, name).unwrap(), "{uc} {name}");
        }
    }
    let profile = std::fs::read_to_string(dir.join("profile.json")).unwrap();
    assert_eq!(profile, campaign::ProfileDescriptor::standard().to_json());
}

#[test]
fn decision_log_carries_every_field() {
    let r = runs(UseCase::Uc2, &[SystemVariant::Ours]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    campaign::write_decisions_jsonl(&path, &r).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len() as u64, SEEDS.len() as u64 * EPOCHS);
    let keys = [
        "seed",
        "epoch",
        "uc",
        "system",
        "stage1",
        "gate_reason",
        "stage2",
        "terminal",
        "degraded",
        "r_local",
        "bytes_charged",
        "latency_ms",
        "path_trace",
        "unsafe_label",
        "audit_kind",
    ];
    for line in &lines {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), keys.len());
        assert!(keys.iter().all(|k| obj.contains_key(*k)));
        let parsed: DecisionLine = serde_json::from_value(v.clone()).unwrap();
        assert_eq!(
            parsed.unsafe_label.is_some(),
            parsed.terminal == intentgate::contract::TerminalDecision::Commit
        );
    }
}

#[test]
fn main_campaign_is_deterministic() {
    let preset = ScenarioPreset::benign(UseCase::Uc1);
    let cfg = ThresholdConfig::uc1();
    let a = campaign::run_main(&preset, &cfg, &SystemVariant::MAIN, &SEEDS[..2], 200).0;
    let b = campaign::run_main(&preset, &cfg, &SystemVariant::MAIN, &SEEDS[..2], 200).0;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
