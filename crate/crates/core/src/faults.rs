//! Fault injectors and the regime grid.
//!
//! Each axis draws from its own `(seed, epoch, "fault:<axis>")` stream, so
//! toggling one axis never moves another axis's realization.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contract::{ThresholdConfig, UseCase};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::scenario::generator::{incompatible_active, CandidateIntent};
use crate::scenario::preset::ScenarioPreset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultTag {
    Stale,
    Conflict,
    DeadlineSqueeze,
    VerifierFault,
    RiskDivergence,
    RollbackCorruption,
}

impl FaultTag {
    pub fn stream_label(self) -> &'static str {
        match self {
            FaultTag::Stale => "fault:stale",
            FaultTag::Conflict => "fault:conflict",
            FaultTag::DeadlineSqueeze => "fault:deadline",
            FaultTag::VerifierFault => "fault:verifier",
            FaultTag::RiskDivergence => "fault:divergence",
            FaultTag::RollbackCorruption => "fault:rollback",
        }
    }
}

/// Injected gaps are `δ + k` with `k` uniform in `[min_extra, max_extra]`,
/// `min_extra ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaleGapDraw {
    pub min_extra: u64,
    pub max_extra: u64,
}

impl Default for StaleGapDraw {
    fn default() -> Self {
        Self {
            min_extra: 1,
            max_extra: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultPlan {
    pub stale_prob: f64,
    pub conflict_prob: f64,
    pub deadline_squeeze_prob: f64,
    pub verifier_fault_prob: f64,
    pub risk_divergence_prob: f64,
    pub rollback_corruption_prob: f64,
    pub stale_gap: StaleGapDraw,
}

impl FaultPlan {
    pub fn is_empty(&self) -> bool {
        self.probabilities().iter().all(|(_, p)| *p == 0.0)
    }

    pub fn probabilities(&self) -> [(FaultTag, f64); 6] {
        [
            (FaultTag::Stale, self.stale_prob),
            (FaultTag::Conflict, self.conflict_prob),
            (FaultTag::DeadlineSqueeze, self.deadline_squeeze_prob),
            (FaultTag::VerifierFault, self.verifier_fault_prob),
            (FaultTag::RiskDivergence, self.risk_divergence_prob),
            (FaultTag::RollbackCorruption, self.rollback_corruption_prob),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (tag, p) in self.probabilities() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{tag:?} probability {p} is not in [0, 1]"
                )));
            }
        }
        if self.stale_gap.min_extra == 0 || self.stale_gap.min_extra > self.stale_gap.max_extra {
            return Err(Error::InvalidConfig(
                "stale_gap needs 1 <= min_extra <= max_extra".into(),
            ));
        }
        Ok(())
    }

    /// Every epoch stale, nothing else.
    pub fn stale_campaign() -> Self {
        Self {
            stale_prob: 1.0,
            ..Self::default()
        }
    }
}

/// Applies every enabled fault independently and tags the candidate.
pub fn inject(plan: &FaultPlan, mut c: CandidateIntent, config: &ThresholdConfig) -> CandidateIntent {
    let uc = c.intent.intent_type.use_case();
    let delta = config.delta_epochs(uc.epoch_seconds());
    let now_ms = c.epoch * uc.epoch_ms();
    let mut tags = BTreeSet::new();

    for (tag, p) in plan.probabilities() {
        if p <= 0.0 {
            continue;
        }
        let mut rng = stream(c.seed, c.epoch, tag.stream_label());
        if !rng.random_bool(p) {
            continue;
        }
        let applied = match tag {
            FaultTag::Stale => {
                let extra = rng.random_range(plan.stale_gap.min_extra..=plan.stale_gap.max_extra);
                let gap = (delta + extra).min(c.epoch);
                c.intent.state_epoch = c.epoch - gap;
                if let Some(env) = c.intent.envelope.as_mut() {
                    env.state_epoch = c.intent.state_epoch;
                }
                gap > delta
            }
            FaultTag::Conflict => {
                let id = format!("fault-act-{}-{}", c.seed, c.epoch);
                c.background.push(incompatible_active(&c.intent, id));
                true
            }
            FaultTag::DeadlineSqueeze => {
                let d_ms = (config.d_min_s * 1000.0 * rng.random_range(0.1..0.9)) as u64;
                c.intent.expires_at = now_ms + d_ms.max(1);
                if let Some(env) = c.intent.envelope.as_mut() {
                    env.expires_at = c.intent.expires_at + 30_000;
                }
                true
            }
            FaultTag::VerifierFault => {
                c.verifier_fault = Some(rng.random_range(0..2));
                true
            }
            FaultTag::RiskDivergence => {
                let shift = config.eps_trust + rng.random_range(0.10..0.30);
                let r = c.intent.risk_score;
                // push toward whichever side has room for the full shift
                c.intent.risk_score = if r + shift <= 1.0 && (r < 0.5 || r - shift < 0.0) {
                    r + shift
                } else {
                    r - shift
                }
                .clamp(0.0, 1.0);
                true
            }
            FaultTag::RollbackCorruption => match c.intent.rollback_handle.as_mut() {
                Some(h) => {
                    if rng.random_bool(0.5) {
                        h.consumed = true;
                    } else {
                        h.expires_at = now_ms.saturating_sub(1);
                    }
                    true
                }
                None => false,
            },
        };
        if applied {
            tags.insert(tag);
        }
    }
    c.injected_faults.extend(tags);
    c
}

/// A named point of the regime grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSlice {
    pub name: String,
    pub plan: FaultPlan,
}

fn slice(name: &str, plan: FaultPlan) -> RegimeSlice {
    RegimeSlice {
        name: name.to_string(),
        plan,
    }
}

pub const BENIGN: &str = "benign";

/// The coarse grid: the benign reference, three levels on each of the six
/// axes, and three composite slices. Twenty-two slices in all.
pub fn coarse_grid() -> Vec<RegimeSlice> {
    let base = FaultPlan::default();
    let mut out = vec![slice(BENIGN, base)];
    for (lvl, p) in [("p10", 0.10), ("p20", 0.20), ("p30", 0.30)] {
        out.push(slice(&format!("stale_{lvl}"), FaultPlan { stale_prob: p, ..base }));
    }
    for (lvl, p) in [("low", 0.20), ("mid", 0.35), ("high", 0.50)] {
        out.push(slice(
            &format!("conflict_{lvl}"),
            FaultPlan {
                conflict_prob: p,
                ..base
            },
        ));
    }
    for (lvl, p) in [("p10", 0.10), ("p20", 0.20), ("p30", 0.30)] {
        out.push(slice(
            &format!("deadline_{lvl}"),
            FaultPlan {
                deadline_squeeze_prob: p,
                ..base
            },
        ));
    }
    for (lvl, p) in [("p05", 0.05), ("p10", 0.10), ("p20", 0.20)] {
        out.push(slice(
            &format!("verifier_{lvl}"),
            FaultPlan {
                verifier_fault_prob: p,
                ..base
            },
        ));
    }
    for (lvl, p) in [("p10", 0.10), ("p20", 0.20), ("p30", 0.30)] {
        out.push(slice(
            &format!("risk_{lvl}"),
            FaultPlan {
                risk_divergence_prob: p,
                ..base
            },
        ));
    }
    for (lvl, p) in [("p05", 0.05), ("p10", 0.10), ("p20", 0.20)] {
        out.push(slice(
            &format!("rollback_{lvl}"),
            FaultPlan {
                rollback_corruption_prob: p,
                ..base
            },
        ));
    }
    out.push(slice("composite_mild", composite(0.5)));
    out.push(slice("composite_moderate", composite(0.75)));
    out.push(slice("composite_severe", composite(1.0)));
    out
}

/// Every axis at once, scaled by `k`.
fn composite(k: f64) -> FaultPlan {
    FaultPlan {
        stale_prob: 0.10 * k,
        conflict_prob: 0.50 * k,
        deadline_squeeze_prob: 0.05 * k,
        verifier_fault_prob: 0.10 * k,
        risk_divergence_prob: 0.30 * k,
        rollback_corruption_prob: 0.05 * k,
        stale_gap: StaleGapDraw::default(),
    }
}

/// The four slices revisited at dense resolution.
pub fn dense_grid() -> Vec<RegimeSlice> {
    ["benign", "risk_p30", "conflict_high", "composite_severe"]
        .iter()
        .filter_map(|n| find_slice(n))
        .collect()
}

pub fn find_slice(name: &str) -> Option<RegimeSlice> {
    let wanted = name.replace('-', "_");
    coarse_grid().into_iter().find(|s| s.name == wanted)
}

/// Presets shipped as configuration files.
pub const CAMPAIGN_PRESETS: [&str; 5] = [
    BENIGN,
    "stale_campaign",
    "risk_p30",
    "conflict_high",
    "composite_severe",
];

/// The benign preset with the named campaign's fault plan.
pub fn campaign_preset(uc: UseCase, name: &str) -> Option<ScenarioPreset> {
    let plan = match name {
        "stale_campaign" => FaultPlan::stale_campaign(),
        other => find_slice(other)?.plan,
    };
    Some(ScenarioPreset {
        name: name.replace('-', "_"),
        faults: plan,
        ..ScenarioPreset::benign(uc)
    })
}
