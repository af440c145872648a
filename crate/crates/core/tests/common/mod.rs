//! Shared fixtures for the integration and acceptance targets.
#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;

use intentgate::contract::{
    ActionType, ControlIntent, CoordinationEvidence, GateReason, ProposedAction, ReversibilityClass, RollbackHandle,
    TerminalDecision, ThresholdConfig, TransactionEnvelope, UseCase,
};
use intentgate::executor::{
    execute_intent, remaining_deadline_s, valid_rollback, ActiveIntent, DecisionRecord, ExecutorState, GateServices,
    TriagePolicy,
};
use intentgate::rng::stream;
use intentgate::verifiers::{QuorumOutcome, Verdict, Vote};

pub const SCOPES: [&str; 3] = ["x0", "x1", "x2"];
const POLICY: &str = "pv1";
const PROCEDURE: &str = "restore";

/// Scripted stage-2 environment.
pub struct ScriptedServices {
    pub fetch_ok: bool,
    pub votes: Vec<Verdict>,
}

impl GateServices for ScriptedServices {
    fn fetch_c1(&mut self, c: &ControlIntent, e: &ExecutorState) -> Option<CoordinationEvidence> {
        self.fetch_ok.then(|| CoordinationEvidence {
            intent_ref: c.intent_id(),
            intent_digest: "0".repeat(64),
            snapshot_epoch: e.epoch,
            collected_at_ms: e.now_ms,
            verifier_panel: vec!["a".into(), "b".into()],
            constraint_summary: vec![],
            conflict_candidates: vec![],
            missing_information: vec![],
            verifier_votes: None,
        })
    }

    fn collect_votes(&mut self, _c: &ControlIntent, _e: &CoordinationEvidence) -> Vec<Vote> {
        self.votes
            .iter()
            .enumerate()
            .map(|(i, &v)| Vote::new(&format!("v{i}"), v, ""))
            .collect()
    }

    fn eager_latency_ms(&mut self) -> f64 {
        1500.0
    }
}

/// One fuzzed input: state, intent and scripted services.
pub struct Case {
    pub state: ExecutorState,
    pub intent: ControlIntent,
    pub services: ScriptedServices,
}

fn pick<'a, R: Rng, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    &xs[rng.random_range(0..xs.len())]
}

fn verdict<R: Rng>(rng: &mut R) -> Verdict {
    *pick(
        rng,
        &[Verdict::Approve, Verdict::Approve, Verdict::Veto, Verdict::Abstain],
    )
}

/// Draws an adversarial case. Every guard is hit with material probability:
/// gaps straddle δ, handles are corrupted in each possible way, budgets
/// straddle both d_min and b_min, and the panel may fail or disagree.
pub fn fuzz_case(uc: UseCase, case_seed: u64) -> Case {
    let rng = &mut stream(case_seed, 0, "fuzz");
    let config = ThresholdConfig::for_use_case(uc);
    let mut e = ExecutorState::new(uc, config.clone());
    e.advance_to(rng.random_range(200..100_000));
    e.policy_version = POLICY.into();
    e.reachable_scopes = ["x0", "x1"].iter().map(|s| s.to_string()).collect();
    e.rollback_procedures.insert(PROCEDURE.into());
    let b_min = config.b_min_bytes;
    e.bandwidth_budget = if rng.random_bool(0.5) {
        rng.random_range(0..=b_min)
    } else {
        rng.random_range(b_min + 1..=8 * b_min)
    };
    for s in SCOPES {
        e.utilization.insert(s.into(), (rng.random_range(0.0..1.2), 1.0));
    }

    let t = *pick(rng, ActionType::for_use_case(uc));
    let target = pick(rng, &SCOPES).to_string();
    let mut keys = vec![format!("{target}:prb")];
    if rng.random_bool(0.3) {
        keys.push(format!("{}:prb", pick(rng, &SCOPES)));
    }
    let delta = e.delta_epochs();
    let gap = rng.random_range(0..=3 * delta + 2).min(e.epoch);
    let now = e.now_ms;
    let d_min_ms = (config.d_min_s * 1000.0) as u64;
    let expires_at = match rng.random_range(0..4) {
        0 => now.saturating_sub(rng.random_range(1..5000)).max(1),
        1 => now + rng.random_range(0..=d_min_ms),
        _ => now + d_min_ms + rng.random_range(1..60_000),
    };
    let mut handle = RollbackHandle {
        handle_id: format!("rb-{case_seed}"),
        target_scope: target.clone(),
        policy_version: POLICY.into(),
        expires_at: now + 600_000,
        procedure_id: PROCEDURE.into(),
        consumed: false,
    };
    match rng.random_range(0..8) {
        0 => handle.policy_version = "pv0".into(),
        1 => handle.expires_at = now.saturating_sub(1),
        2 => handle.procedure_id = "unknown".into(),
        3 => handle.consumed = true,
        4 => handle.target_scope = "x2".into(),
        5 => {
            let mut used = handle.clone();
            used.consumed = true;
            e.rollback_registry.insert(used.handle_id.clone(), used);
        }
        _ => {}
    }
    let reversibility = if rng.random_bool(0.05) {
        *pick(
            rng,
            &[
                ReversibilityClass::Reversible,
                ReversibilityClass::CostlyReversible,
                ReversibilityClass::Irreversible,
            ],
        )
    } else {
        t.reversibility()
    };
    let risk_score = if rng.random_bool(0.03) {
        *pick(rng, &[-0.1, 1.2, f64::NAN])
    } else {
        rng.random_range(0.0..=1.0)
    };
    let direction = *pick(rng, &[-0.2, 0.2]);
    let intent = ControlIntent {
        intent_type: t,
        proposed_action: ProposedAction::new(target.clone()).with_param("delta", direction),
        target_scope: vec![target.clone()],
        resource_keys: keys.clone(),
        state_epoch: e.epoch - gap,
        expires_at,
        reversibility_class: reversibility,
        risk_score,
        rollback_handle: (!rng.random_bool(0.1)).then_some(handle),
        needs_upgrade: rng.random_bool(0.3),
        blocking_req: if rng.random_bool(0.2) {
            BTreeSet::from(["prereq/drain".to_string()])
        } else {
            BTreeSet::new()
        },
        envelope: rng.random_bool(0.5).then(|| TransactionEnvelope {
            transaction_id: format!("tx-{case_seed}"),
            state_epoch: e.epoch - gap,
            expires_at: expires_at + 30_000,
            idempotency_key: format!("idem-{case_seed}"),
            visibility_scope: vec![target.clone()],
            sender_role: "planner".into(),
            receiver_role: "executor".into(),
            policy_digest: POLICY.into(),
        }),
    };
    if rng.random_bool(0.3) {
        let other = *pick(rng, ActionType::for_use_case(uc));
        e.active_intents.push(ActiveIntent {
            intent_id: format!("act-{case_seed}"),
            intent_type: other,
            target_scope: vec![target],
            resource_keys: keys,
            direction: if rng.random_bool(0.5) { 1 } else { -1 },
        });
    }
    let n_votes = rng.random_range(0..=3);
    let services = ScriptedServices {
        fetch_ok: rng.random_bool(0.95),
        votes: (0..n_votes).map(|_| verdict(rng)).collect(),
    };
    Case {
        state: e,
        intent,
        services,
    }
}

/// Violation counts for P1 to P4, plus how often each premise fired.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct InvariantTally {
    pub cases: u64,
    pub p1_premise: u64,
    pub p1_violations: u64,
    pub p2_premise: u64,
    pub p2_violations: u64,
    pub p3_ample: u64,
    pub p3_ample_violations: u64,
    pub p3_squeezed: u64,
    pub p3_squeezed_violations: u64,
    pub p4_degraded: u64,
    pub p4_violations: u64,
}

impl InvariantTally {
    pub fn violations(&self) -> u64 {
        self.p1_violations
            + self.p2_violations
            + self.p3_ample_violations
            + self.p3_squeezed_violations
            + self.p4_violations
    }
}

/// Runs one case under the full contract and scores it.
pub fn check_case(case: Case, tally: &mut InvariantTally) -> DecisionRecord {
    let Case {
        mut state,
        intent,
        mut services,
    } = case;
    let cfg = state.config.clone();
    let before = state.clone();
    let d = remaining_deadline_s(&intent, state.now_ms);
    let b = state.bandwidth_budget;
    let fetch_ok = services.fetch_ok;
    let rec = execute_intent(&intent, &mut state, &TriagePolicy::default(), &mut services, None);
    let commit = rec.decision.terminal == TerminalDecision::Commit;
    let budget_ok = d > cfg.d_min_s && b > cfg.b_min_bytes;
    tally.cases += 1;

    // P1
    if before.epoch - intent.state_epoch > before.delta_epochs() {
        tally.p1_premise += 1;
        tally.p1_violations += u64::from(commit);
    }
    // P2
    if intent.reversibility_class != ReversibilityClass::Irreversible
        && !valid_rollback(intent.rollback_handle.as_ref(), &before)
    {
        tally.p2_premise += 1;
        tally.p2_violations += u64::from(commit);
    }
    // P3
    if rec.decision.gate_reason.is_evidence_mandatory() {
        if budget_ok {
            tally.p3_ample += 1;
            let ok = !commit || (rec.quorum == Some(QuorumOutcome::Approved) && intent.blocking_req.is_empty());
            tally.p3_ample_violations += u64::from(!ok);
        } else {
            tally.p3_squeezed += 1;
            tally.p3_squeezed_violations += u64::from(rec.decision.terminal != TerminalDecision::Reject);
        }
    }
    // P4; a fetch that fails counts as C1 unavailable, like a short budget
    if rec.decision.degraded {
        tally.p4_degraded += 1;
        let ok = (!budget_ok || !fetch_ok)
            && rec.decision.gate_reason == GateReason::MidRisk
            && intent.reversibility_class == ReversibilityClass::Reversible
            && rec.r_local.is_some_and(|r| r <= cfg.tau_degraded)
            && intent.blocking_req.is_empty()
            && commit;
        tally.p4_violations += u64::from(!ok);
    }
    rec
}

/// Fuzzes `n` cases for one use case.
pub fn fuzz_invariants(uc: UseCase, n: u64) -> InvariantTally {
    let mut tally = InvariantTally::default();
    for i in 0..n {
        check_case(fuzz_case(uc, i), &mut tally);
    }
    tally
}

/// Exact two-sided Fisher p-value by enumerating every table with the same
/// margins; tables at most as probable as the observed one are summed.
pub fn fisher_brute(t: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = t;
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    let ln_choose = |n: u64, k: u64| -> f64 {
        let lf = |x: u64| (1..=x).map(|i| (i as f64).ln()).sum::<f64>();
        lf(n) - lf(k) - lf(n - k)
    };
    let p = |x: u64| (ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_choose(n, c1)).exp();
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let p_obs = p(a);
    (lo..=hi)
        .map(p)
        .filter(|&q| q <= p_obs * (1.0 + 1e-7))
        .sum::<f64>()
        .min(1.0)
}
