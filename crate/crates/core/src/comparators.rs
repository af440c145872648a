//! The seven pipelines compared in the benchmark. Each is a thin wrapper
//! over the executor that changes either the triage policy or the cost
//! accounting, never both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audit::{self, AuditKind, AuditSink};
use crate::contract::{encode_c0, encode_c1, ControlIntent, Decision, Stage1Decision, TerminalDecision};
use crate::error::{Error, Result};
use crate::executor::{
    execute_intent, schema_valid, ActiveIntent, DecisionRecord, ExecutorState, RiskMode, TriagePolicy, LOCAL_TRIAGE_MS,
};
use crate::risk::compute_risk;
use crate::scenario::generator::{CandidateIntent, EpochServices};
use crate::scenario::preset::ScenarioPreset;

/// Fixed commit threshold of the legacy single-threshold executor.
pub const THETA_BL4: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SystemVariant {
    Ours,
    FbInv,
    StInv,
    Bl4Legacy,
    C0Only,
    Ab1NoC1,
    Ab2NoWireless,
}

impl SystemVariant {
    pub const ALL: [SystemVariant; 7] = [
        SystemVariant::Ours,
        SystemVariant::FbInv,
        SystemVariant::StInv,
        SystemVariant::Bl4Legacy,
        SystemVariant::C0Only,
        SystemVariant::Ab1NoC1,
        SystemVariant::Ab2NoWireless,
    ];

    /// The five systems of the main comparison.
    pub const MAIN: [SystemVariant; 5] = [
        SystemVariant::Ours,
        SystemVariant::FbInv,
        SystemVariant::StInv,
        SystemVariant::Bl4Legacy,
        SystemVariant::C0Only,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemVariant::Ours => "OURS",
            SystemVariant::FbInv => "FB_INV",
            SystemVariant::StInv => "ST_INV",
            SystemVariant::Bl4Legacy => "BL4_LEGACY",
            SystemVariant::C0Only => "C0_ONLY",
            SystemVariant::Ab1NoC1 => "AB1_NO_C1",
            SystemVariant::Ab2NoWireless => "AB2_NO_WIRELESS",
        }
    }

    /// Triage policy for the variants that run the two-stage executor.
    pub fn policy(self) -> Option<TriagePolicy> {
        let full = TriagePolicy::default();
        match self {
            SystemVariant::Ours | SystemVariant::FbInv => Some(full),
            SystemVariant::StInv => Some(TriagePolicy {
                risk_mode: RiskMode::TypeOnly,
                ..full
            }),
            SystemVariant::Ab1NoC1 => Some(TriagePolicy {
                force_degraded: true,
                ..full
            }),
            SystemVariant::Ab2NoWireless => Some(TriagePolicy {
                risk_mode: RiskMode::NoWirelessInputs,
                staleness_guard: false,
                assume_reversible: true,
                force_degraded: false,
            }),
            SystemVariant::Bl4Legacy | SystemVariant::C0Only => None,
        }
    }
}

impl fmt::Display for SystemVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SystemVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        let alias = match norm.as_str() {
            "BL4" => Some(SystemVariant::Bl4Legacy),
            "AB1" => Some(SystemVariant::Ab1NoC1),
            "AB2" => Some(SystemVariant::Ab2NoWireless),
            _ => None,
        };
        alias
            .or_else(|| Self::ALL.into_iter().find(|v| v.as_str() == norm))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown system {s:?}")))
    }
}

/// Parses a comma-separated system list.
pub fn parse_systems(list: &str) -> Result<Vec<SystemVariant>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Runs one epoch's candidate through the chosen pipeline. The executor
/// state must already hold the epoch context.
pub fn run_variant(
    v: SystemVariant,
    cand: &CandidateIntent,
    e: &mut ExecutorState,
    preset: &ScenarioPreset,
    sink: Option<&mut dyn AuditSink>,
) -> DecisionRecord {
    let mut services = EpochServices {
        candidate: cand,
        preset,
    };
    match v {
        SystemVariant::FbInv => {
            let policy = TriagePolicy::default();
            let rec = execute_intent(&cand.intent, e, &policy, &mut services, sink);
            fb_inv_overlay(rec, cand, e, preset)
        }
        SystemVariant::Bl4Legacy => single_stage(cand, e, sink, |c, e| compute_risk(c, e) < THETA_BL4, "bl4"),
        SystemVariant::C0Only => single_stage(cand, e, sink, |_, _| true, "c0_only"),
        other => {
            let policy = other.policy().expect("two-stage variant");
            execute_intent(&cand.intent, e, &policy, &mut services, sink)
        }
    }
}

/// Same decisions as OURS; pays the eager C0+C1+C2 cost and the quorum
/// latency on every intent.
fn fb_inv_overlay(
    mut rec: DecisionRecord,
    cand: &CandidateIntent,
    e: &ExecutorState,
    preset: &ScenarioPreset,
) -> DecisionRecord {
    let evidence = cand.evidence(preset.byte_model.max_constraints);
    rec.latency_ms = LOCAL_TRIAGE_MS + cand.eager_latency_ms;
    rec.decided_at_ms = e.now_ms + rec.latency_ms.ceil() as u64;
    rec.c1_fetched = true;
    rec.c1_bytes = encode_c1(&evidence).len() as u64;
    rec.c2_bytes = audit::c2_len(&cand.intent, rec.decided_at_ms, Some(&evidence), &e.versions);
    rec.bytes_charged = rec.c0_bytes + rec.c1_bytes + rec.c2_bytes;
    rec.path_trace.push("overlay:eager_full".into());
    rec
}

/// Schema and expiry checks, then a single commit predicate. No staleness
/// guard, rollback check, trust boundary or quorum.
fn single_stage(
    cand: &CandidateIntent,
    e: &mut ExecutorState,
    sink: Option<&mut dyn AuditSink>,
    commit_if: impl Fn(&ControlIntent, &ExecutorState) -> bool,
    label: &str,
) -> DecisionRecord {
    let c = &cand.intent;
    let now = e.now_ms;
    let (stage1, step) = if !schema_valid(c) {
        (Stage1Decision::Reject, "schema:reject".to_string())
    } else if c.expires_at < now {
        (Stage1Decision::Reject, "expiry:reject".to_string())
    } else if commit_if(c, e) {
        (Stage1Decision::Commit, format!("{label}:commit"))
    } else {
        (Stage1Decision::Reject, format!("{label}:reject"))
    };
    let decision = Decision::from_stage1(stage1);
    if decision.terminal == TerminalDecision::Commit {
        e.active_intents.push(ActiveIntent::from_intent(c));
    }
    let c0_bytes = encode_c0(c).len() as u64;
    let latency_ms = LOCAL_TRIAGE_MS;
    let rec = DecisionRecord {
        epoch: e.epoch,
        intent_id: c.intent_id(),
        intent_type: c.intent_type,
        decision,
        r_local: None,
        quorum: None,
        c1_fetched: false,
        c0_bytes,
        c1_bytes: 0,
        c2_bytes: 0,
        bytes_charged: c0_bytes,
        latency_ms,
        decided_at_ms: now + latency_ms.ceil() as u64,
        path_trace: vec![step],
        audit_kind: AuditKind::Minimal,
    };
    if let Some(sink) = sink {
        sink.emit(audit::emit_audit(&rec, c, None, &e.versions));
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for v in SystemVariant::ALL {
            assert_eq!(v.as_str().parse::<SystemVariant>().unwrap(), v);
        }
        assert_eq!("fb-inv".parse::<SystemVariant>().unwrap(), SystemVariant::FbInv);
        assert_eq!("ours".parse::<SystemVariant>().unwrap(), SystemVariant::Ours);
        assert!("nope".parse::<SystemVariant>().is_err());
    }

    #[test]
    fn parse_list() {
        let v = parse_systems("OURS,FB_INV").unwrap();
        assert_eq!(v, vec![SystemVariant::Ours, SystemVariant::FbInv]);
    }

    #[test]
    fn ablation_policies() {
        let ab2 = SystemVariant::Ab2NoWireless.policy().unwrap();
        assert!(!ab2.staleness_guard && ab2.assume_reversible);
        assert!(SystemVariant::Ab1NoC1.policy().unwrap().force_degraded);
        assert!(SystemVariant::C0Only.policy().is_none());
    }
}
