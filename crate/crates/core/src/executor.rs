//! Two-stage actuation contract: local C0 triage, then gate resolution via
//! on-demand C1 evidence and the verifier quorum, or the degraded-mode rule.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::audit::{self, AuditKind, AuditSink, VersionInfo};
use crate::contract::{
    encode_c0, encode_c1, ActionType, ControlIntent, CoordinationEvidence, Decision, GateReason, ReversibilityClass,
    RollbackHandle, Stage1Decision, Stage2Decision, TerminalDecision, ThresholdConfig, UseCase,
};
use crate::risk::{self, compute_contention, RiskInputs};
use crate::verifiers::{quorum, QuorumOutcome, Vote};

/// A committed, still-live intent as seen by the conflict check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveIntent {
    pub intent_id: String,
    pub intent_type: ActionType,
    pub target_scope: Vec<String>,
    pub resource_keys: Vec<String>,
    pub direction: i8,
}

impl ActiveIntent {
    pub fn from_intent(c: &ControlIntent) -> Self {
        Self {
            intent_id: c.intent_id(),
            intent_type: c.intent_type,
            target_scope: c.target_scope.clone(),
            resource_keys: c.resource_keys.clone(),
            direction: c.proposed_action.direction(),
        }
    }
}

/// Executor-local state. Single writer per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutorState {
    pub uc: UseCase,
    pub epoch: u64,
    pub now_ms: u64,
    pub active_intents: Vec<ActiveIntent>,
    pub rollback_registry: BTreeMap<String, RollbackHandle>,
    /// target id -> (utilization, capacity)
    pub utilization: BTreeMap<String, (f64, f64)>,
    pub config: ThresholdConfig,
    /// Control-plane bandwidth available this epoch (bytes).
    pub bandwidth_budget: u64,
    pub verifier_set: Vec<String>,
    pub policy_version: String,
    pub reachable_scopes: BTreeSet<String>,
    pub rollback_procedures: BTreeSet<String>,
    pub versions: VersionInfo,
    /// transaction id -> idempotency key
    pub seen_transactions: BTreeMap<String, String>,
}

impl ExecutorState {
    pub fn new(uc: UseCase, config: ThresholdConfig) -> Self {
        Self {
            uc,
            epoch: 0,
            now_ms: 0,
            active_intents: Vec::new(),
            rollback_registry: BTreeMap::new(),
            utilization: BTreeMap::new(),
            config,
            bandwidth_budget: 0,
            verifier_set: Vec::new(),
            policy_version: String::new(),
            reachable_scopes: BTreeSet::new(),
            rollback_procedures: BTreeSet::new(),
            versions: VersionInfo::default(),
            seen_transactions: BTreeMap::new(),
        }
    }

    pub fn delta_epochs(&self) -> u64 {
        self.config.delta_epochs(self.uc.epoch_seconds())
    }

    /// Advances the clock. Epochs never move backwards.
    pub fn advance_to(&mut self, epoch: u64) {
        debug_assert!(epoch >= self.epoch, "epoch must be monotone");
        self.epoch = self.epoch.max(epoch);
        self.now_ms = self.epoch * self.uc.epoch_ms();
    }

    /// Worst utilization/capacity ratio over the intent's target scope.
    pub fn contention_for(&self, c: &ControlIntent) -> f64 {
        c.target_scope
            .iter()
            .filter_map(|t| self.utilization.get(t))
            .map(|&(u, cap)| compute_contention(u, cap))
            .fold(0.0, f64::max)
    }

    pub fn is_consumed(&self, handle_id: &str) -> bool {
        self.rollback_registry.get(handle_id).is_some_and(|h| h.consumed)
    }
}

/// How a pipeline variant computes r_ℓ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskMode {
    /// Full multi-factor score.
    Composite,
    /// r_ℓ = φ(a).
    TypeOnly,
    /// σ̂ and ĉ forced to zero.
    NoWirelessInputs,
}

/// Knobs the comparator variants turn. The default is the full contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriagePolicy {
    pub risk_mode: RiskMode,
    pub staleness_guard: bool,
    /// Degraded eligibility treats every intent as reversible.
    pub assume_reversible: bool,
    /// Stage 2 never fetches C1.
    pub force_degraded: bool,
}

impl Default for TriagePolicy {
    fn default() -> Self {
        Self {
            risk_mode: RiskMode::Composite,
            staleness_guard: true,
            assume_reversible: false,
            force_degraded: false,
        }
    }
}

impl TriagePolicy {
    pub fn local_risk(&self, c: &ControlIntent, e: &ExecutorState) -> f64 {
        let mut inputs: RiskInputs = risk::risk_inputs(c, e);
        match self.risk_mode {
            RiskMode::Composite => inputs.score(&e.config.weights),
            RiskMode::TypeOnly => inputs.phi,
            RiskMode::NoWirelessInputs => {
                inputs.sigma_hat = 0.0;
                inputs.c_hat = 0.0;
                inputs.score(&e.config.weights)
            }
        }
    }
}

/// Stage-2 input.
#[derive(Debug, Clone, PartialEq)]
pub struct GateContext<'a> {
    pub intent: &'a ControlIntent,
    pub gate_reason: GateReason,
    pub r_local: f64,
    /// Remaining deadline, seconds.
    pub d_remaining: f64,
    pub b_available: u64,
}

/// Capabilities Stage 2 needs from its environment.
pub trait GateServices {
    /// `None` models a fetch that fails after starting.
    fn fetch_c1(&mut self, c: &ControlIntent, e: &ExecutorState) -> Option<CoordinationEvidence>;
    fn collect_votes(&mut self, c: &ControlIntent, evidence: &CoordinationEvidence) -> Vec<Vote>;
    /// Combined C1-fetch and quorum latency for this epoch.
    fn eager_latency_ms(&mut self) -> f64;
}

pub fn schema_valid(c: &ControlIntent) -> bool {
    let (reversibility, _) = crate::contract::catalog_lookup(c.intent_type);
    c.risk_score.is_finite()
        && (0.0..=1.0).contains(&c.risk_score)
        && c.reversibility_class == reversibility
        && !c.target_scope.is_empty()
        && !c.resource_keys.is_empty()
        && !c.proposed_action.target.is_empty()
        && c.proposed_action.params.values().all(|v| v.is_finite())
        && c.expires_at > 0
}

/// Vacuously true without an envelope.
pub fn valid_envelope(c: &ControlIntent, e: &ExecutorState) -> bool {
    let Some(env) = &c.envelope else {
        return true;
    };
    let replay_ok = match e.seen_transactions.get(&env.transaction_id) {
        Some(key) => *key == env.idempotency_key,
        None => true,
    };
    env.is_well_formed() && env.expires_at >= e.now_ms && env.state_epoch <= e.epoch && replay_ok
}

pub fn valid_rollback(h: Option<&RollbackHandle>, e: &ExecutorState) -> bool {
    let Some(h) = h else {
        return false;
    };
    e.reachable_scopes.contains(&h.target_scope)
        && h.policy_version == e.policy_version
        && h.expires_at >= e.now_ms
        && e.rollback_procedures.contains(&h.procedure_id)
        && !h.consumed
        && !e.is_consumed(&h.handle_id)
}

/// Incompatibility over a shared resource key: different action on a shared
/// scope, or the same action pushing in the opposite direction.
pub fn incompatible(c: &ControlIntent, a: &ActiveIntent) -> bool {
    if !c.shares_resource_with(&a.resource_keys) {
        return false;
    }
    if c.intent_type != a.intent_type {
        c.target_scope.iter().any(|s| a.target_scope.contains(s))
    } else {
        let d = c.proposed_action.direction();
        d != 0 && a.direction != 0 && d != a.direction
    }
}

pub fn local_conflict(c: &ControlIntent, e: &ExecutorState) -> bool {
    e.active_intents.iter().any(|a| incompatible(c, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Outcome {
    pub decision: Stage1Decision,
    pub gate_reason: GateReason,
    pub r_local: Option<f64>,
    pub trace: Vec<&'static str>,
}

/// Local C0 triage. Branch order is part of the contract.
pub fn stage1_triage(c: &ControlIntent, now_ms: u64, e: &ExecutorState, policy: &TriagePolicy) -> Stage1Outcome {
    let mut trace = Vec::with_capacity(10);
    let out = |decision, gate_reason, r_local, trace| Stage1Outcome {
        decision,
        gate_reason,
        r_local,
        trace,
    };
    let reject = |trace| out(Stage1Decision::Reject, GateReason::None, None, trace);

    if !schema_valid(c) {
        trace.push("schema:reject");
        return reject(trace);
    }
    if c.envelope.is_some() && !valid_envelope(c, e) {
        trace.push("envelope:reject");
        return reject(trace);
    }
    if c.expires_at < now_ms {
        trace.push("expiry:reject");
        return reject(trace);
    }
    if policy.staleness_guard && risk::epoch_gap(e.epoch, c.state_epoch) > e.delta_epochs() {
        trace.push("staleness:reject");
        return reject(trace);
    }
    if c.reversibility_class != ReversibilityClass::Irreversible && !valid_rollback(c.rollback_handle.as_ref(), e) {
        trace.push("rollback:reject");
        return reject(trace);
    }

    let r = policy.local_risk(c, e);
    let cfg = &e.config;
    if r >= cfg.tau_reject {
        trace.push("reject_floor:reject");
        return out(Stage1Decision::Reject, GateReason::None, Some(r), trace);
    }
    let gate = |reason, trace| out(Stage1Decision::Gate, reason, Some(r), trace);
    if (c.risk_score - r).abs() > cfg.eps_trust {
        trace.push("risk_divergence:gate");
        return gate(GateReason::RiskDivergence, trace);
    }
    if c.needs_upgrade {
        trace.push("planner_upgrade:gate");
        return gate(GateReason::PlannerUpgrade, trace);
    }
    if local_conflict(c, e) {
        trace.push("local_conflict:gate");
        return gate(GateReason::LocalConflict, trace);
    }
    if r <= cfg.tau_commit && c.blocking_req.is_empty() {
        trace.push("risk_decision:commit");
        out(Stage1Decision::Commit, GateReason::None, Some(r), trace)
    } else if r >= cfg.tau_reject {
        trace.push("risk_decision:reject");
        out(Stage1Decision::Reject, GateReason::None, Some(r), trace)
    } else {
        trace.push("risk_decision:gate");
        gate(GateReason::MidRisk, trace)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Outcome {
    pub decision: Stage2Decision,
    pub degraded: bool,
    pub evidence: Option<CoordinationEvidence>,
    pub quorum: Option<QuorumOutcome>,
    pub trace: Vec<&'static str>,
}

/// Gate resolution. Budget comparisons are strict; equality is insufficient.
pub fn stage2_resolve(
    g: &GateContext<'_>,
    e: &ExecutorState,
    policy: &TriagePolicy,
    services: &mut dyn GateServices,
) -> Stage2Outcome {
    debug_assert!(g.gate_reason != GateReason::None);
    let mut trace = Vec::with_capacity(3);
    let c = g.intent;
    let cfg = &e.config;
    let fetchable = !policy.force_degraded && g.d_remaining > cfg.d_min_s && g.b_available > cfg.b_min_bytes;

    if fetchable {
        if let Some(evidence) = services.fetch_c1(c, e) {
            trace.push("c1:fetched");
            let mut evidence = evidence;
            let votes = services.collect_votes(c, &evidence);
            // An empty panel cannot approve; it escalates.
            let (outcome, votes) = match quorum(votes) {
                Ok(q) => (q.outcome, q.votes),
                Err(_) => (QuorumOutcome::Escalate, Vec::new()),
            };
            evidence.verifier_votes = Some(votes);
            let decision = match outcome {
                QuorumOutcome::Approved if !c.blocking_req.is_empty() => {
                    trace.push("quorum:approved_blocked");
                    Stage2Decision::Reject
                }
                QuorumOutcome::Approved => {
                    trace.push("quorum:approved");
                    Stage2Decision::Commit
                }
                QuorumOutcome::Conflict => {
                    trace.push("quorum:conflict");
                    Stage2Decision::Reject
                }
                QuorumOutcome::Escalate => {
                    trace.push("quorum:escalate");
                    Stage2Decision::HumanGate
                }
            };
            return Stage2Outcome {
                decision,
                degraded: false,
                evidence: Some(evidence),
                quorum: Some(outcome),
                trace,
            };
        }
        trace.push("c1:fetch_failed");
    }

    trace.push("degraded");
    let reversible = policy.assume_reversible || c.reversibility_class == ReversibilityClass::Reversible;
    let (decision, degraded) = if g.gate_reason.is_evidence_mandatory() {
        trace.push("degraded:evidence_mandatory");
        (Stage2Decision::Reject, false)
    } else if !c.blocking_req.is_empty() {
        trace.push("degraded:blocking_req");
        (Stage2Decision::Reject, false)
    } else if g.gate_reason == GateReason::MidRisk && reversible && g.r_local <= cfg.tau_degraded {
        trace.push("degraded:commit");
        (Stage2Decision::Commit, true)
    } else {
        trace.push("degraded:reject");
        (Stage2Decision::Reject, false)
    };
    Stage2Outcome {
        decision,
        degraded,
        evidence: None,
        quorum: None,
        trace,
    }
}

/// Everything the run loop needs to know about one executed intent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub epoch: u64,
    pub intent_id: String,
    pub intent_type: ActionType,
    pub decision: Decision,
    pub r_local: Option<f64>,
    pub quorum: Option<QuorumOutcome>,
    pub c1_fetched: bool,
    pub c0_bytes: u64,
    pub c1_bytes: u64,
    pub c2_bytes: u64,
    pub bytes_charged: u64,
    pub latency_ms: f64,
    pub decided_at_ms: u64,
    pub path_trace: Vec<String>,
    pub audit_kind: AuditKind,
}

impl DecisionRecord {
    pub fn committed(&self) -> bool {
        self.decision.terminal == TerminalDecision::Commit
    }

    pub fn stage1_commit(&self) -> bool {
        self.committed() && self.decision.stage1 == Stage1Decision::Commit
    }

    pub fn stage1_reject(&self) -> bool {
        self.decision.stage1 == Stage1Decision::Reject
    }
}

/// Seconds left until the intent's expiry, never negative.
pub fn remaining_deadline_s(c: &ControlIntent, now_ms: u64) -> f64 {
    c.expires_at.saturating_sub(now_ms) as f64 / 1000.0
}

/// Runs both stages against a fixed state snapshot, then applies the commit
/// side effects and hands the record to the audit sink if one is attached.
pub fn execute_intent(
    c: &ControlIntent,
    e: &mut ExecutorState,
    policy: &TriagePolicy,
    services: &mut dyn GateServices,
    sink: Option<&mut dyn AuditSink>,
) -> DecisionRecord {
    let now = e.now_ms;
    let s1 = stage1_triage(c, now, e, policy);
    let mut trace: Vec<String> = s1.trace.iter().map(|s| s.to_string()).collect();

    let mut decision = Decision::from_stage1(s1.decision);
    let mut evidence = None;
    let mut quorum_outcome = None;
    if s1.decision == Stage1Decision::Gate {
        let ctx = GateContext {
            intent: c,
            gate_reason: s1.gate_reason,
            r_local: s1.r_local.expect("gated intents carry r_local"),
            d_remaining: remaining_deadline_s(c, now),
            b_available: e.bandwidth_budget,
        };
        let s2 = stage2_resolve(&ctx, e, policy, services);
        trace.extend(s2.trace.iter().map(|s| s.to_string()));
        decision = Decision {
            stage1: Stage1Decision::Gate,
            gate_reason: s1.gate_reason,
            stage2: Some(s2.decision),
            terminal: s2.decision.into(),
            degraded: s2.degraded,
        };
        evidence = s2.evidence;
        quorum_outcome = s2.quorum;
    }
    debug_assert!(decision.is_consistent());

    let c1_fetched = evidence.is_some();
    let latency_ms = LOCAL_TRIAGE_MS + if c1_fetched { services.eager_latency_ms() } else { 0.0 };
    let decided_at_ms = now + latency_ms.ceil() as u64;
    let audit_kind = audit::audit_kind(&decision);

    let c0_bytes = encode_c0(c).len() as u64;
    let c1_bytes = evidence.as_ref().map_or(0, |ev| encode_c1(ev).len() as u64);
    let c2_bytes = match audit_kind {
        AuditKind::FullC2 => audit::c2_len(c, decided_at_ms, evidence.as_ref(), &e.versions),
        AuditKind::Minimal => 0,
    };

    if let Some(env) = &c.envelope {
        e.seen_transactions
            .entry(env.transaction_id.clone())
            .or_insert_with(|| env.idempotency_key.clone());
    }
    if decision.terminal == TerminalDecision::Commit {
        if let Some(h) = &c.rollback_handle {
            let entry = e
                .rollback_registry
                .entry(h.handle_id.clone())
                .or_insert_with(|| h.clone());
            entry.consume();
        }
        e.active_intents.push(ActiveIntent::from_intent(c));
    }

    let record = DecisionRecord {
        epoch: e.epoch,
        intent_id: c.intent_id(),
        intent_type: c.intent_type,
        decision,
        r_local: s1.r_local,
        quorum: quorum_outcome,
        c1_fetched,
        c0_bytes,
        c1_bytes,
        c2_bytes,
        bytes_charged: c0_bytes + c1_bytes + c2_bytes,
        latency_ms,
        decided_at_ms,
        path_trace: trace,
        audit_kind,
    };
    if let Some(sink) = sink {
        sink.emit(audit::emit_audit(&record, c, evidence.as_ref(), &e.versions));
    }
    record
}

/// Fixed local triage latency.
pub const LOCAL_TRIAGE_MS: f64 = 10.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::{ProposedAction, TransactionEnvelope};
    use crate::verifiers::Verdict;

    pub(crate) struct FixedServices {
        pub votes: Vec<Verdict>,
        pub fetch_ok: bool,
    }

    impl GateServices for FixedServices {
        fn fetch_c1(&mut self, c: &ControlIntent, e: &ExecutorState) -> Option<CoordinationEvidence> {
            self.fetch_ok.then(|| CoordinationEvidence {
                intent_ref: c.intent_id(),
                intent_digest: "0".repeat(64),
                snapshot_epoch: e.epoch,
                collected_at_ms: 0,
                verifier_panel: vec![],
                constraint_summary: vec![],
                conflict_candidates: vec![],
                missing_information: vec![],
                verifier_votes: None,
            })
        }

        fn collect_votes(&mut self, _c: &ControlIntent, _e: &CoordinationEvidence) -> Vec<Vote> {
            self.votes.iter().map(|&v| Vote::new("v", v, "")).collect()
        }

        fn eager_latency_ms(&mut self) -> f64 {
            1800.0
        }
    }

    fn state() -> ExecutorState {
        let mut e = ExecutorState::new(UseCase::Uc1, ThresholdConfig::uc1());
        e.advance_to(100);
        e.policy_version = "pv1".into();
        e.reachable_scopes.insert("c1".into());
        e.rollback_procedures.insert("restore".into());
        e.bandwidth_budget = 10_240;
        e
    }

    fn intent(t: ActionType, e: &ExecutorState) -> ControlIntent {
        ControlIntent {
            intent_type: t,
            proposed_action: ProposedAction::new("c1").with_param("delta", -0.2),
            target_scope: vec!["c1".into()],
            resource_keys: vec!["c1:prb".into()],
            state_epoch: e.epoch,
            expires_at: e.now_ms + 20_000,
            reversibility_class: t.reversibility(),
            risk_score: 0.06,
            rollback_handle: Some(RollbackHandle {
                handle_id: "rb-1".into(),
                target_scope: "c1".into(),
                policy_version: "pv1".into(),
                expires_at: e.now_ms + 60_000,
                procedure_id: "restore".into(),
                consumed: false,
            }),
            needs_upgrade: false,
            blocking_req: BTreeSet::new(),
            envelope: None,
        }
    }

    fn triage(c: &ControlIntent, e: &ExecutorState) -> (Stage1Decision, GateReason) {
        let o = stage1_triage(c, e.now_ms, e, &TriagePolicy::default());
        (o.decision, o.gate_reason)
    }

    #[test]
    fn schema_checks() {
        let e = state();
        let mut c = intent(ActionType::CellSleep, &e);
        assert!(schema_valid(&c));
        c.risk_score = 1.3;
        assert!(!schema_valid(&c));
        let mut c = intent(ActionType::CellSleep, &e);
        c.reversibility_class = ReversibilityClass::Irreversible;
        assert!(!schema_valid(&c));
    }

    #[test]
    fn low_risk_commits_at_stage1() {
        let e = state();
        let c = intent(ActionType::CellWake, &e);
        assert_eq!(triage(&c, &e), (Stage1Decision::Commit, GateReason::None));
        let mut blocked = c.clone();
        blocked.blocking_req.insert("x".into());
        assert_eq!(triage(&blocked, &e), (Stage1Decision::Gate, GateReason::MidRisk));
    }

    #[test]
    fn expiry_precedes_staleness() {
        let e = state();
        let mut c = intent(ActionType::CellWake, &e);
        c.expires_at = e.now_ms - 1;
        c.state_epoch = e.epoch - 10;
        let o = stage1_triage(&c, e.now_ms, &e, &TriagePolicy::default());
        assert_eq!(o.decision, Stage1Decision::Reject);
        assert_eq!(o.trace.last(), Some(&"expiry:reject"));
        assert!(!o.trace.iter().any(|t| t.starts_with("staleness")));
    }

    #[test]
    fn staleness_is_strict() {
        let e = state();
        let mut c = intent(ActionType::CellWake, &e);
        c.state_epoch = e.epoch - 4;
        assert_eq!(triage(&c, &e).0, Stage1Decision::Reject);
        c.state_epoch = e.epoch - 3;
        // equality passes the guard; σ̂ = 1 now drives divergence
        assert_ne!(
            stage1_triage(&c, e.now_ms, &e, &TriagePolicy::default()).trace.last(),
            Some(&"staleness:reject")
        );
    }

    #[test]
    fn divergence_gates() {
        let e = state();
        let mut c = intent(ActionType::CellWake, &e);
        c.risk_score = 0.9;
        assert_eq!(triage(&c, &e), (Stage1Decision::Gate, GateReason::RiskDivergence));
    }

    #[test]
    fn missing_rollback_rejects_reversible_only() {
        let e = state();
        let mut c = intent(ActionType::CellWake, &e);
        c.rollback_handle = None;
        assert_eq!(triage(&c, &e).0, Stage1Decision::Reject);
        let mut esc = intent(ActionType::SlaEscalate, &e);
        esc.rollback_handle = None;
        assert_ne!(
            stage1_triage(&esc, e.now_ms, &e, &TriagePolicy::default()).trace[0],
            "rollback:reject"
        );
    }

    #[test]
    fn envelope_rules() {
        let mut e = state();
        let mut c = intent(ActionType::CellWake, &e);
        assert!(valid_envelope(&c, &e));
        c.envelope = Some(TransactionEnvelope {
            transaction_id: "tx-1".into(),
            state_epoch: e.epoch,
            expires_at: e.now_ms + 1000,
            idempotency_key: "k1".into(),
            visibility_scope: vec!["c1".into()],
            sender_role: "planner".into(),
            receiver_role: "executor".into(),
            policy_digest: "abc".into(),
        });
        assert!(valid_envelope(&c, &e));
        e.seen_transactions.insert("tx-1".into(), "k1".into());
        assert!(valid_envelope(&c, &e));
        e.seen_transactions.insert("tx-1".into(), "k2".into());
        assert!(!valid_envelope(&c, &e));
        e.seen_transactions.clear();
        c.envelope.as_mut().unwrap().expires_at = e.now_ms - 1;
        assert!(!valid_envelope(&c, &e));
    }

    #[test]
    fn rollback_clauses() {
        let e = state();
        let c = intent(ActionType::CellWake, &e);
        assert!(!valid_rollback(None, &e));
        assert!(valid_rollback(c.rollback_handle.as_ref(), &e));
        let mut h = c.rollback_handle.clone().unwrap();
        h.consumed = true;
        assert!(!valid_rollback(Some(&h), &e));
        let mut h = c.rollback_handle.clone().unwrap();
        h.policy_version = "pv0".into();
        assert!(!valid_rollback(Some(&h), &e));
    }

    #[test]
    fn conflict_matrix() {
        let mut e = state();
        let sleep = intent(ActionType::CellSleep, &e);
        assert!(!local_conflict(&sleep, &e));
        let redirect = ControlIntent {
            intent_type: ActionType::LoadRedirect,
            proposed_action: ProposedAction::new("c1").with_peer("c2").with_param("delta", 0.2),
            ..sleep.clone()
        };
        e.active_intents.push(ActiveIntent::from_intent(&redirect));
        assert!(local_conflict(&sleep, &e));

        let mut e = state();
        let mut a = intent(ActionType::RfPowerReduce, &e);
        a.target_scope = vec!["c1/band-a".into()];
        let mut b = a.clone();
        b.target_scope = vec!["c1/band-b".into()];
        e.active_intents.push(ActiveIntent::from_intent(&a));
        assert!(!local_conflict(&b, &e));
    }

    #[test]
    fn stage2_examples() {
        let e = state();
        let mut c = intent(ActionType::CellWake, &e);
        let mut svc = FixedServices {
            votes: vec![Verdict::Approve, Verdict::Veto],
            fetch_ok: true,
        };
        let p = TriagePolicy::default();
        fn g(c: &ControlIntent, reason: GateReason, r: f64, d: f64, b: u64) -> GateContext<'_> {
            GateContext {
                intent: c,
                gate_reason: reason,
                r_local: r,
                d_remaining: d,
                b_available: b,
            }
        }

        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 1.0, 10_240), &e, &p, &mut svc);
        assert_eq!((o.decision, o.degraded), (Stage2Decision::Commit, true));
        let o = stage2_resolve(&g(&c, GateReason::RiskDivergence, 0.45, 1.0, 10_240), &e, &p, &mut svc);
        assert_eq!(o.decision, Stage2Decision::Reject);
        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 20.0, 10_240), &e, &p, &mut svc);
        assert_eq!(o.decision, Stage2Decision::Reject);
        svc.votes = vec![Verdict::Approve, Verdict::Abstain];
        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 20.0, 10_240), &e, &p, &mut svc);
        assert_eq!(o.decision, Stage2Decision::HumanGate);
        // equality with d_min is insufficient
        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 5.0, 10_240), &e, &p, &mut svc);
        assert!(o.degraded);
        // failed fetch falls through to the degraded rule
        svc.fetch_ok = false;
        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 20.0, 10_240), &e, &p, &mut svc);
        assert!(o.degraded && o.evidence.is_none());
        // approved but blocked
        svc.fetch_ok = true;
        svc.votes = vec![Verdict::Approve, Verdict::Approve];
        c.blocking_req.insert("x".into());
        let o = stage2_resolve(&g(&c, GateReason::MidRisk, 0.45, 20.0, 10_240), &e, &p, &mut svc);
        assert_eq!(o.decision, Stage2Decision::Reject);
    }

    #[test]
    fn commit_consumes_handle_and_registers() {
        let mut e = state();
        let c = intent(ActionType::CellWake, &e);
        let mut svc = FixedServices {
            votes: vec![Verdict::Approve],
            fetch_ok: true,
        };
        let rec = execute_intent(&c, &mut e, &TriagePolicy::default(), &mut svc, None);
        assert!(rec.stage1_commit());
        assert_eq!(rec.bytes_charged, rec.c0_bytes);
        assert_eq!(rec.latency_ms, LOCAL_TRIAGE_MS);
        assert!(e.is_consumed("rb-1"));
        assert_eq!(e.active_intents.len(), 1);
        // replaying the same handle now fails INV-2
        let again = execute_intent(&c, &mut e, &TriagePolicy::default(), &mut svc, None);
        assert_eq!(again.decision.terminal, TerminalDecision::Reject);
    }
}
