//! Contract-level domain types: the C0 intent payload, its transaction
//! envelope, C1 coordination evidence, the C2 provenance digest, the typed
//! action catalog and the threshold configuration.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::verifiers::Vote;

/// Serialized C0 size bounds (bytes, inclusive).
pub const C0_BYTES: (usize, usize) = (200, 400);
/// Serialized C1 size bounds (bytes, inclusive).
pub const C1_BYTES: (usize, usize) = (400, 800);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseCase {
    /// Energy-saving policy push over a cell ring.
    Uc1,
    /// Slice-SLA protection over a slice/cell grid.
    Uc2,
}

impl UseCase {
    pub const ALL: [UseCase; 2] = [UseCase::Uc1, UseCase::Uc2];

    pub fn as_str(self) -> &'static str {
        match self {
            UseCase::Uc1 => "uc1",
            UseCase::Uc2 => "uc2",
        }
    }

    /// Scenario seconds per decision epoch.
    pub fn epoch_seconds(self) -> f64 {
        match self {
            UseCase::Uc1 => 10.0,
            UseCase::Uc2 => 5.0,
        }
    }

    pub fn epoch_ms(self) -> u64 {
        (self.epoch_seconds() * 1000.0) as u64
    }

    /// Denominator of the conflict-intensity ratio.
    pub fn conflict_max(self) -> usize {
        match self {
            UseCase::Uc1 => 4,
            UseCase::Uc2 => 6,
        }
    }
}

impl fmt::Display for UseCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for UseCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uc1" => Ok(UseCase::Uc1),
            "uc2" => Ok(UseCase::Uc2),
            other => Err(Error::InvalidConfig(format!("unknown use case {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionType {
    CellSleep,
    CellWake,
    RfPowerReduce,
    RfReconfig,
    LoadRedirect,
    SlicePriorityBoost,
    SliceAdmissionRestrict,
    SliceResourceRealloc,
    LoadBalanceUpdate,
    SlaEscalate,
}

impl ActionType {
    pub const ALL: [ActionType; 10] = [
        ActionType::CellSleep,
        ActionType::CellWake,
        ActionType::RfPowerReduce,
        ActionType::RfReconfig,
        ActionType::LoadRedirect,
        ActionType::SlicePriorityBoost,
        ActionType::SliceAdmissionRestrict,
        ActionType::SliceResourceRealloc,
        ActionType::LoadBalanceUpdate,
        ActionType::SlaEscalate,
    ];

    pub fn for_use_case(uc: UseCase) -> &'static [ActionType] {
        match uc {
            UseCase::Uc1 => &Self::ALL[..5],
            UseCase::Uc2 => &Self::ALL[5..],
        }
    }

    pub fn use_case(self) -> UseCase {
        if Self::ALL[..5].contains(&self) {
            UseCase::Uc1
        } else {
            UseCase::Uc2
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionType::CellSleep => "CELL_SLEEP",
            ActionType::CellWake => "CELL_WAKE",
            ActionType::RfPowerReduce => "RF_POWER_REDUCE",
            ActionType::RfReconfig => "RF_RECONFIG",
            ActionType::LoadRedirect => "LOAD_REDIRECT",
            ActionType::SlicePriorityBoost => "SLICE_PRIORITY_BOOST",
            ActionType::SliceAdmissionRestrict => "SLICE_ADMISSION_RESTRICT",
            ActionType::SliceResourceRealloc => "SLICE_RESOURCE_REALLOC",
            ActionType::LoadBalanceUpdate => "LOAD_BALANCE_UPDATE",
            ActionType::SlaEscalate => "SLA_ESCALATE",
        }
    }

    /// Catalog reversibility class.
    pub fn reversibility(self) -> ReversibilityClass {
        catalog_lookup(self).0
    }

    /// Catalog risk class.
    pub fn risk_class(self) -> RiskClass {
        catalog_lookup(self).1
    }
}

impl fmt::Display for ActionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReversibilityClass {
    Reversible,
    CostlyReversible,
    Irreversible,
}

impl ReversibilityClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ReversibilityClass::Reversible => "reversible",
            ReversibilityClass::CostlyReversible => "costly_reversible",
            ReversibilityClass::Irreversible => "irreversible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskClass {
    Low,
    Med,
    High,
}

impl RiskClass {
    /// Decision value fed into the composite risk score.
    pub fn phi(self) -> f64 {
        match self {
            RiskClass::Low => 0.2,
            RiskClass::Med => 0.5,
            RiskClass::High => 0.8,
        }
    }
}

/// Static action catalog. Total over the closed enumeration.
pub const fn catalog_lookup(t: ActionType) -> (ReversibilityClass, RiskClass) {
    use ReversibilityClass::*;
    use RiskClass::*;
    match t {
        ActionType::CellSleep => (Reversible, Med),
        ActionType::CellWake => (Reversible, Low),
        ActionType::RfPowerReduce => (Reversible, Low),
        ActionType::RfReconfig => (CostlyReversible, High),
        ActionType::LoadRedirect => (Reversible, Med),
        ActionType::SlicePriorityBoost => (Reversible, Low),
        ActionType::SliceAdmissionRestrict => (CostlyReversible, Med),
        ActionType::SliceResourceRealloc => (CostlyReversible, High),
        ActionType::LoadBalanceUpdate => (Reversible, Med),
        ActionType::SlaEscalate => (Irreversible, Low),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionEnvelope {
    pub transaction_id: String,
    pub state_epoch: u64,
    /// Absolute expiry, ms.
    pub expires_at: u64,
    pub idempotency_key: String,
    pub visibility_scope: Vec<String>,
    pub sender_role: String,
    pub receiver_role: String,
    pub policy_digest: String,
}

impl TransactionEnvelope {
    /// All string fields non-empty and expiry positive.
    pub fn is_well_formed(&self) -> bool {
        !self.transaction_id.is_empty()
            && !self.idempotency_key.is_empty()
            && !self.visibility_scope.is_empty()
            && self.visibility_scope.iter().all(|s| !s.is_empty())
            && !self.sender_role.is_empty()
            && !self.receiver_role.is_empty()
            && !self.policy_digest.is_empty()
            && self.expires_at > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollbackHandle {
    pub handle_id: String,
    pub target_scope: String,
    pub policy_version: String,
    /// Absolute expiry, ms.
    pub expires_at: u64,
    pub procedure_id: String,
    pub consumed: bool,
}

impl RollbackHandle {
    /// Mark the handle consumed. Returns `false` if it already was.
    pub fn consume(&mut self) -> bool {
        if self.consumed {
            return false;
        }
        self.consumed = true;
        true
    }
}

/// Parameterized action: primary target, optional secondary object and
/// numeric parameters. The sign of `delta` gives the action direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposedAction {
    pub target: String,
    pub peer: Option<String>,
    pub params: BTreeMap<String, f64>,
}

impl ProposedAction {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            peer: None,
            params: BTreeMap::new(),
        }
    }

    pub fn with_peer(mut self, peer: impl Into<String>) -> Self {
        self.peer = Some(peer.into());
        self
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    /// -1, 0 or +1 according to the sign of the `delta` parameter.
    pub fn direction(&self) -> i8 {
        match self.param("delta") {
            Some(d) if d > 0.0 => 1,
            Some(d) if d < 0.0 => -1,
            _ => 0,
        }
    }
}

/// The C0 payload: the minimum executable intent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlIntent {
    pub intent_type: ActionType,
    pub proposed_action: ProposedAction,
    pub target_scope: Vec<String>,
    pub resource_keys: Vec<String>,
    pub state_epoch: u64,
    /// Absolute expiry, ms.
    pub expires_at: u64,
    pub reversibility_class: ReversibilityClass,
    /// Planner-computed risk.
    pub risk_score: f64,
    pub rollback_handle: Option<RollbackHandle>,
    pub needs_upgrade: bool,
    pub blocking_req: BTreeSet<String>,
    /// Transport shell; not counted in the C0 byte budget.
    pub envelope: Option<TransactionEnvelope>,
}

impl ControlIntent {
    /// Stable identifier: the envelope transaction id, or a synthesized one.
    pub fn intent_id(&self) -> String {
        match &self.envelope {
            Some(env) => env.transaction_id.clone(),
            None => format!(
                "{}@{}:{}",
                self.intent_type, self.state_epoch, self.proposed_action.target
            ),
        }
    }

    pub fn shares_resource_with(&self, keys: &[String]) -> bool {
        self.resource_keys.iter().any(|k| keys.contains(k))
    }
}

/// Rounds to four decimals so the canonical encoding has bounded width.
pub fn canonical_f64(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn number(x: f64) -> Value {
    json!(canonical_f64(x))
}

fn c0_value(c: &ControlIntent) -> Value {
    let params: Map<String, Value> = c
        .proposed_action
        .params
        .iter()
        .map(|(k, v)| (k.clone(), number(*v)))
        .collect();
    json!({
        "intent_type": c.intent_type.as_str(),
        "proposed_action": {
            "target": c.proposed_action.target,
            "peer": c.proposed_action.peer,
            "params": params,
        },
        "target_scope": c.target_scope,
        "resource_keys": c.resource_keys,
        "state_epoch": c.state_epoch,
        "expires_at": c.expires_at,
        "reversibility_class": c.reversibility_class.as_str(),
        "risk_score": number(c.risk_score),
        "rollback_handle": c.rollback_handle.as_ref().map(|h| h.handle_id.clone()),
        "needs_upgrade": c.needs_upgrade,
        "blocking_req": c.blocking_req,
    })
}

fn check_range(layer: &'static str, bytes: Vec<u8>, (min, max): (usize, usize)) -> Result<Vec<u8>> {
    let len = bytes.len();
    if len < min || len > max {
        return Err(Error::EncodingOverflow { layer, len, min, max });
    }
    Ok(bytes)
}

/// Canonical C0 bytes without the size check.
pub fn encode_c0(c: &ControlIntent) -> Vec<u8> {
    serde_json::to_vec(&c0_value(c)).expect("JSON values always encode")
}

/// Canonical C0 encoding: key-sorted compact JSON, floats at four decimals,
/// rollback handle carried by reference.
pub fn serialize_c0(c: &ControlIntent) -> Result<Vec<u8>> {
    check_range("C0", encode_c0(c), C0_BYTES)
}

/// One active constraint on the target scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRecord {
    pub scope: String,
    pub kind: String,
    pub bound: f64,
    pub observed: f64,
    pub source: String,
    /// Aggregation window of the observation, seconds.
    pub window_s: f64,
}

/// The C1 payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationEvidence {
    pub intent_ref: String,
    /// SHA-256 of the canonical C0 encoding the evidence refers to.
    pub intent_digest: String,
    pub snapshot_epoch: u64,
    /// Absolute time the bundle was assembled, ms.
    pub collected_at_ms: u64,
    /// Verifiers expected to vote on this bundle.
    pub verifier_panel: Vec<String>,
    pub constraint_summary: Vec<ConstraintRecord>,
    pub conflict_candidates: Vec<String>,
    pub missing_information: Vec<String>,
    pub verifier_votes: Option<Vec<Vote>>,
}

fn c1_value(e: &CoordinationEvidence) -> Value {
    let constraints: Vec<Value> = e
        .constraint_summary
        .iter()
        .map(|r| {
            json!({
                "scope": r.scope,
                "kind": r.kind,
                "bound": number(r.bound),
                "observed": number(r.observed),
                "source": r.source,
                "window_s": number(r.window_s),
            })
        })
        .collect();
    let votes = e.verifier_votes.as_ref().map(|vs| {
        vs.iter()
            .map(|v| json!({"verifier_id": v.verifier_id, "verdict": v.verdict.as_str()}))
            .collect::<Vec<_>>()
    });
    json!({
        "intent_ref": e.intent_ref,
        "intent_digest": e.intent_digest,
        "snapshot_epoch": e.snapshot_epoch,
        "collected_at_ms": e.collected_at_ms,
        "verifier_panel": e.verifier_panel,
        "constraint_summary": constraints,
        "conflict_candidates": e.conflict_candidates,
        "missing_information": e.missing_information,
        "verifier_votes": votes,
    })
}

/// Canonical C1 bytes without the size check.
pub fn encode_c1(e: &CoordinationEvidence) -> Vec<u8> {
    serde_json::to_vec(&c1_value(e)).expect("JSON values always encode")
}

/// Canonical C1 encoding.
pub fn serialize_c1(e: &CoordinationEvidence) -> Result<Vec<u8>> {
    check_range("C1", encode_c1(e), C1_BYTES)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetentionClass {
    Short,
    Standard,
    Extended,
}

/// The C2 payload: post-hoc provenance digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceDigest {
    pub transaction_id: String,
    pub decided_at_ms: u64,
    pub generated_at_ms: u64,
    pub telemetry_snapshot_ids: Vec<String>,
    pub tool_version: String,
    pub model_version: String,
    pub policy_version: String,
    pub verifier_version: String,
    pub dependency_hashes: Vec<String>,
    /// Opaque signature bytes, hex encoded.
    pub signature: String,
    pub evidence_uris: Vec<String>,
    pub retention_class: RetentionClass,
}

/// Canonical C2 encoding (no size bounds).
pub fn serialize_c2(d: &ProvenanceDigest) -> Vec<u8> {
    // Value maps are key-sorted, so the round trip fixes the key order.
    let value = serde_json::to_value(d).expect("digest fields always encode");
    serde_json::to_vec(&value).expect("JSON values always encode")
}

/// Triage thresholds and risk weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub tau_commit: f64,
    pub tau_reject: f64,
    pub tau_degraded: f64,
    pub delta_staleness_s: f64,
    pub d_min_s: f64,
    pub b_min_bytes: u64,
    pub eps_trust: f64,
    /// (w_t, w_s, w_c, w_n): type, staleness, conflict, contention.
    pub weights: [f64; 4],
}

impl ThresholdConfig {
    pub fn uc1() -> Self {
        Self {
            tau_commit: 0.30,
            tau_reject: 0.80,
            tau_degraded: 0.50,
            delta_staleness_s: 30.0,
            d_min_s: 5.0,
            b_min_bytes: 2048,
            eps_trust: 0.15,
            weights: [0.3, 0.3, 0.2, 0.2],
        }
    }

    pub fn uc2() -> Self {
        Self {
            tau_commit: 0.25,
            tau_reject: 0.75,
            tau_degraded: 0.40,
            delta_staleness_s: 10.0,
            d_min_s: 2.0,
            b_min_bytes: 1024,
            eps_trust: 0.15,
            weights: [0.3, 0.3, 0.2, 0.2],
        }
    }

    pub fn for_use_case(uc: UseCase) -> Self {
        match uc {
            UseCase::Uc1 => Self::uc1(),
            UseCase::Uc2 => Self::uc2(),
        }
    }

    /// Staleness bound in whole epochs for the given epoch length.
    pub fn delta_epochs(&self, epoch_seconds: f64) -> u64 {
        ((self.delta_staleness_s / epoch_seconds).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("tau_commit", self.tau_commit),
            ("tau_reject", self.tau_reject),
            ("tau_degraded", self.tau_degraded),
            ("eps_trust", self.eps_trust),
        ];
        for (name, v) in fractions {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !(self.tau_commit < self.tau_degraded && self.tau_degraded < self.tau_reject) {
            return Err(Error::InvalidConfig(format!(
                "thresholds must satisfy tau_commit < tau_degraded < tau_reject, got {} / {} / {}",
                self.tau_commit, self.tau_degraded, self.tau_reject
            )));
        }
        if self.delta_staleness_s <= 0.0 || self.d_min_s < 0.0 {
            return Err(Error::InvalidConfig("durations must be positive".into()));
        }
        if self.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidConfig("weights must lie in [0, 1]".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage1Decision {
    Commit,
    Gate,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateReason {
    None,
    RiskDivergence,
    LocalConflict,
    PlannerUpgrade,
    MidRisk,
}

impl GateReason {
    /// Gates that may only commit through verifier-approved evidence.
    pub fn is_evidence_mandatory(self) -> bool {
        matches!(
            self,
            GateReason::RiskDivergence | GateReason::LocalConflict | GateReason::PlannerUpgrade
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Stage2Decision {
    Commit,
    Reject,
    HumanGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TerminalDecision {
    Commit,
    Reject,
    HumanGate,
}

impl From<Stage2Decision> for TerminalDecision {
    fn from(d: Stage2Decision) -> Self {
        match d {
            Stage2Decision::Commit => TerminalDecision::Commit,
            Stage2Decision::Reject => TerminalDecision::Reject,
            Stage2Decision::HumanGate => TerminalDecision::HumanGate,
        }
    }
}

/// Two-stage decision outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub stage1: Stage1Decision,
    pub gate_reason: GateReason,
    pub stage2: Option<Stage2Decision>,
    pub terminal: TerminalDecision,
    pub degraded: bool,
}

impl Decision {
    pub fn from_stage1(stage1: Stage1Decision) -> Self {
        let terminal = match stage1 {
            Stage1Decision::Commit => TerminalDecision::Commit,
            _ => TerminalDecision::Reject,
        };
        Self {
            stage1,
            gate_reason: GateReason::None,
            stage2: None,
            terminal,
            degraded: false,
        }
    }

    /// Structural invariants of a decision.
    pub fn is_consistent(&self) -> bool {
        let gated = self.stage1 == Stage1Decision::Gate;
        let reason_ok = (self.gate_reason == GateReason::None) != gated;
        let stage2_ok = self.stage2.is_some() == gated;
        let terminal_ok = match self.stage2 {
            Some(s2) => self.terminal == TerminalDecision::from(s2),
            None => match self.stage1 {
                Stage1Decision::Commit => self.terminal == TerminalDecision::Commit,
                Stage1Decision::Reject => self.terminal == TerminalDecision::Reject,
                Stage1Decision::Gate => false,
            },
        };
        let degraded_ok = !self.degraded || self.stage2 == Some(Stage2Decision::Commit);
        reason_ok && stage2_ok && terminal_ok && degraded_ok
    }
}


#[cfg(test)]
mod encoding_tests {
    use super::*;

    fn wake(keys: Vec<String>) -> ControlIntent {
        ControlIntent {
            intent_type: ActionType::CellWake,
            proposed_action: ProposedAction::new("c0").with_param("delta", 0.25),
            target_scope: vec!["c0".into()],
            resource_keys: keys,
            state_epoch: 0,
            expires_at: 1,
            reversibility_class: ReversibilityClass::Reversible,
            risk_score: 0.0,
            rollback_handle: None,
            needs_upgrade: false,
            blocking_req: BTreeSet::new(),
            envelope: None,
        }
    }

    fn evidence(constraints: usize, candidates: usize) -> CoordinationEvidence {
        CoordinationEvidence {
            intent_ref: "tx-uc1-42-100".into(),
            intent_digest: "0".repeat(64),
            snapshot_epoch: 100,
            collected_at_ms: 1_000_000,
            verifier_panel: vec!["uc1-load".into(), "uc1-sla".into()],
            constraint_summary: (0..constraints)
                .map(|_| ConstraintRecord {
                    scope: "c0".into(),
                    kind: "post_action_load_ratio_max".into(),
                    bound: 0.9,
                    observed: 0.5,
                    source: "pm/c0/prb-utilization".into(),
                    window_s: 10.0,
                })
                .collect(),
            conflict_candidates: (0..candidates).map(|i| format!("act-uc1-42-{i}")).collect(),
            missing_information: vec![],
            verifier_votes: None,
        }
    }

    // Hand-written canonical forms; keys sorted, compact separators.
    const MIN_WAKE: &str = concat!(
        r#"{"blocking_req":[],"expires_at":1,"intent_type":"CELL_WAKE","needs_upgrade":false,"#,
        r#""proposed_action":{"params":{"delta":0.25},"peer":null,"target":"c0"},"#,
        r#""resource_keys":["c0:prb","c0:pwr"],"reversibility_class":"reversible","risk_score":0.0,"#,
        r#""rollback_handle":null,"state_epoch":0,"target_scope":["c0"]}"#
    );
    const ONE_CONSTRAINT: &str = concat!(
        r#"{"collected_at_ms":1000000,"conflict_candidates":[],"#,
        r#""constraint_summary":[{"bound":0.9,"kind":"post_action_load_ratio_max","observed":0.5,"#,
        r#""scope":"c0","source":"pm/c0/prb-utilization","window_s":10.0}],"#,
        r#""intent_digest":"0000000000000000000000000000000000000000000000000000000000000000","#,
        r#""intent_ref":"tx-uc1-42-100","missing_information":[],"snapshot_epoch":100,"#,
        r#""verifier_panel":["uc1-load","uc1-sla"],"verifier_votes":null}"#
    );

    fn minimal_wake() -> ControlIntent {
        wake(vec!["c0:prb".into(), "c0:pwr".into()])
    }

    #[test]
    fn minimal_wake_matches_hand_encoding() {
        let bytes = serialize_c0(&minimal_wake()).unwrap();
        assert_eq!(std::str::from_utf8(&bytes).unwrap(), MIN_WAKE);
        assert_eq!(bytes.len(), 301);
        assert!(bytes.len() >= 200);
    }

    #[test]
    fn c0_is_deterministic() {
        let c = minimal_wake();
        assert_eq!(serialize_c0(&c).unwrap(), serialize_c0(&c.clone()).unwrap());
    }

    #[test]
    fn eight_keys_fit_c0() {
        let keys: Vec<String> = (0..8).map(|i| format!("c{}:prb", 100 + i)).collect();
        let len = serialize_c0(&wake(keys)).unwrap().len();
        assert_eq!(len, 371);
        assert!(len <= 400);
    }

    #[test]
    fn c0_overflow_is_reported() {
        let keys: Vec<String> = (0..40).map(|i| format!("c{i}:prb")).collect();
        match serialize_c0(&wake(keys)) {
            Err(Error::EncodingOverflow { layer: "C0", len, .. }) => assert!(len > 400),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn one_constraint_matches_hand_encoding() {
        let bytes = serialize_c1(&evidence(1, 0)).unwrap();
        assert_eq!(std::str::from_utf8(&bytes).unwrap(), ONE_CONSTRAINT);
        assert_eq!(bytes.len(), 422);
        assert!(bytes.len() >= 400);
    }

    #[test]
    fn ten_candidates_fit_c1() {
        let e = evidence(1, 10);
        let len = serialize_c1(&e).unwrap().len();
        // each candidate adds its quoted id plus a comma, minus one comma
        let ids: usize = e.conflict_candidates.iter().map(|c| c.len() + 3).sum::<usize>() - 1;
        assert_eq!(len, 422 + ids);
        assert_eq!(len, 571);
        assert!(len <= 800);
        assert_eq!(serialize_c1(&e).unwrap(), serialize_c1(&e.clone()).unwrap());
    }
}
