//! Per-epoch candidate generation.
//!
//! A candidate bundles the intent the planner proposes, the exogenous
//! executor-side context for that epoch (background intents, bandwidth,
//! fresh utilization), the noisy view the verifiers will see, and the hidden
//! ground truth. Everything is a pure function of `(seed, epoch, preset)`.

use std::collections::{BTreeMap, BTreeSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Geometric, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contract::{
    encode_c0, ActionType, ConstraintRecord, ControlIntent, CoordinationEvidence, ProposedAction, RollbackHandle,
    ThresholdConfig, TransactionEnvelope, UseCase,
};
use crate::executor::{ActiveIntent, ExecutorState, GateServices};
use crate::faults::FaultTag;
use crate::risk::compute_contention;
use crate::rng::{stream, StreamRng};
use crate::scenario::kpi::EpochKpi;
use crate::scenario::network::{cell_id, phi_uc1, phi_uc2, slice_id, uc1_tput_change, Uc1State, Uc2State};
use crate::scenario::preset::ScenarioPreset;
use crate::verifiers::{uc1_load_verifier, uc1_sla_verifier, uc2_fairness_verifier, uc2_isolation_verifier, Vote};

pub const POLICY_VERSION: &str = "policy/1";
const PROCEDURE_PREFIX: &str = "restore/";

/// What the verifier panel is allowed to see: post-action estimates built
/// from noisy fresh telemetry, without the hidden disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerifierView {
    Uc1 {
        max_load_ratio: f64,
        tput_change: f64,
        target_load: f64,
    },
    Uc2 {
        allocations: Vec<f64>,
        guarantees: Vec<f64>,
        jain: f64,
        worst_violation: f64,
    },
}

/// Hidden per-epoch labels. Only the post-hoc scoring path reads these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// The safety predicate evaluated on the post-action true state.
    pub would_be_safe: bool,
    pub if_committed: EpochKpi,
    pub if_idle: EpochKpi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateIntent {
    pub seed: u64,
    pub epoch: u64,
    pub intent: ControlIntent,
    /// Unrelated live intents from other planner threads.
    pub background: Vec<ActiveIntent>,
    pub bandwidth: u64,
    /// Fresh executor telemetry: object id -> (utilization, capacity).
    pub utilization: BTreeMap<String, (f64, f64)>,
    pub eager_latency_ms: f64,
    pub view: VerifierView,
    /// Index of a verifier whose verdict is flipped this epoch.
    pub verifier_fault: Option<usize>,
    pub injected_faults: BTreeSet<FaultTag>,
    truth: GroundTruth,
}

impl CandidateIntent {
    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Epoch gap between the intent's snapshot and the executor clock.
    pub fn gap(&self) -> u64 {
        self.epoch.abs_diff(self.intent.state_epoch)
    }

    pub fn is_stale(&self, delta_epochs: u64) -> bool {
        self.gap() > delta_epochs
    }

    /// Loads the epoch context into the executor state.
    pub fn prepare(&self, e: &mut ExecutorState) {
        e.advance_to(self.epoch);
        e.active_intents.clone_from(&self.background);
        e.utilization.clone_from(&self.utilization);
        e.bandwidth_budget = self.bandwidth;
    }

    /// Builds the C1 evidence bundle for this epoch's intent.
    pub fn evidence(&self, max_constraints: usize) -> CoordinationEvidence {
        let c = &self.intent;
        let scope = c.proposed_action.target.clone();
        let uc = c.intent_type.use_case();
        let window_s = uc.epoch_seconds();
        let mut constraints = match &self.view {
            VerifierView::Uc1 {
                max_load_ratio,
                tput_change,
                target_load,
            } => vec![
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "post_action_load_ratio_max".into(),
                    bound: 0.9,
                    observed: *max_load_ratio,
                    source: format!("pm/{scope}/prb-utilization"),
                    window_s,
                },
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "user_throughput_change_min".into(),
                    bound: -0.05,
                    observed: *tput_change,
                    source: format!("pm/{scope}/dl-throughput"),
                    window_s,
                },
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "current_load".into(),
                    bound: 1.0,
                    observed: *target_load,
                    source: format!("pm/{scope}/load"),
                    window_s,
                },
            ],
            VerifierView::Uc2 {
                allocations,
                guarantees,
                jain,
                worst_violation,
            } => vec![
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "slice_violation_rate_max".into(),
                    bound: 0.1,
                    observed: *worst_violation,
                    source: format!("pm/{scope}/sla-counter"),
                    window_s,
                },
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "jain_fairness_min".into(),
                    bound: 0.75,
                    observed: *jain,
                    source: format!("pm/{scope}/served-throughput"),
                    window_s,
                },
                ConstraintRecord {
                    scope: scope.clone(),
                    kind: "guarantee_margin_min".into(),
                    bound: 0.0,
                    observed: allocations
                        .iter()
                        .zip(guarantees)
                        .map(|(a, g)| a - g)
                        .fold(f64::INFINITY, f64::min),
                    source: format!("pm/{scope}/allocation"),
                    window_s,
                },
            ],
        };
        constraints.truncate(max_constraints);
        let conflict_candidates = self
            .background
            .iter()
            .filter(|a| c.shares_resource_with(&a.resource_keys))
            .map(|a| a.intent_id.clone())
            .collect();
        let mut missing_information: Vec<String> = c.blocking_req.iter().cloned().collect();
        if c.rollback_handle.is_none() {
            missing_information.push("rollback_handle".into());
        }
        CoordinationEvidence {
            intent_ref: c.intent_id(),
            intent_digest: crate::audit::hex(&Sha256::digest(encode_c0(c))),
            snapshot_epoch: self.epoch,
            collected_at_ms: self.epoch * uc.epoch_ms(),
            verifier_panel: crate::verifiers::panel(uc).iter().map(|v| v.to_string()).collect(),
            constraint_summary: constraints,
            conflict_candidates,
            missing_information,
            verifier_votes: None,
        }
    }

    /// The two-verifier panel's votes, with any injected verdict flip.
    pub fn votes(&self, cfg: &crate::verifiers::VerifierConfig) -> Vec<Vote> {
        let mut votes = match &self.view {
            VerifierView::Uc1 {
                max_load_ratio,
                tput_change,
                ..
            } => vec![
                uc1_load_verifier(*max_load_ratio, cfg),
                uc1_sla_verifier(*tput_change, cfg),
            ],
            VerifierView::Uc2 {
                allocations,
                guarantees,
                jain,
                ..
            } => vec![
                uc2_isolation_verifier(allocations, guarantees),
                uc2_fairness_verifier(*jain, cfg),
            ],
        };
        if let Some(i) = self.verifier_fault {
            if let Some(v) = votes.get_mut(i % 2) {
                v.verdict = v.verdict.flipped();
                v.rationale.push_str(" [fault]");
            }
        }
        votes
    }
}

/// Stage-2 services backed by one epoch's candidate.
pub struct EpochServices<'a> {
    pub candidate: &'a CandidateIntent,
    pub preset: &'a ScenarioPreset,
}

impl GateServices for EpochServices<'_> {
    fn fetch_c1(&mut self, _c: &ControlIntent, _e: &ExecutorState) -> Option<CoordinationEvidence> {
        Some(self.candidate.evidence(self.preset.byte_model.max_constraints))
    }

    fn collect_votes(&mut self, _c: &ControlIntent, _e: &CoordinationEvidence) -> Vec<Vote> {
        self.candidate.votes(&self.preset.verifiers)
    }

    fn eager_latency_ms(&mut self) -> f64 {
        self.candidate.eager_latency_ms
    }
}

/// First epoch of a run: a seed-dependent time of day, far enough from zero
/// that lagged snapshots never underflow.
pub fn start_epoch(seed: u64, preset: &ScenarioPreset) -> u64 {
    let mut rng = stream(seed, 0, "start");
    100 + rng.random_range(0..preset.load.period_epochs.max(1))
}

/// All object ids the executor can reach.
pub fn object_ids(preset: &ScenarioPreset) -> Vec<String> {
    let t = &preset.topology;
    match preset.uc {
        UseCase::Uc1 => (0..t.cells).map(cell_id).collect(),
        UseCase::Uc2 => (0..t.cells)
            .flat_map(|c| (0..t.slices).map(move |s| slice_id(c, s)))
            .collect(),
    }
}

/// Executor state wired up for a scenario run.
pub fn executor_for(preset: &ScenarioPreset, config: ThresholdConfig) -> ExecutorState {
    let mut e = ExecutorState::new(preset.uc, config);
    e.policy_version = POLICY_VERSION.to_string();
    e.reachable_scopes = object_ids(preset).into_iter().collect();
    e.rollback_procedures = ActionType::for_use_case(preset.uc)
        .iter()
        .map(|t| format!("{PROCEDURE_PREFIX}{t}"))
        .collect();
    e.verifier_set = match preset.uc {
        UseCase::Uc1 => vec!["uc1-load".into(), "uc1-sla".into()],
        UseCase::Uc2 => vec!["uc2-isolation".into(), "uc2-fairness".into()],
    };
    e
}

fn uniform(rng: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn uc1_loads(preset: &ScenarioPreset, seed: u64, epoch: u64) -> Vec<f64> {
    (0..preset.topology.cells)
        .map(|i| preset.load.diurnal_load(seed, epoch, i))
        .collect()
}

fn uc2_loads(preset: &ScenarioPreset, seed: u64, epoch: u64) -> Vec<Vec<f64>> {
    let s = preset.topology.slices;
    (0..preset.topology.cells)
        .map(|c| {
            (0..s)
                .map(|k| preset.load.diurnal_load(seed, epoch, c * s + k))
                .collect()
        })
        .collect()
}

/// Draws the epoch gap so that P(gap > δ) = p_stale.
fn draw_gap(rng: &mut StreamRng, p_stale: f64, delta: u64) -> u64 {
    if p_stale <= 0.0 {
        return 0;
    }
    let p = 1.0 - p_stale.powf(1.0 / (delta + 1) as f64);
    Geometric::new(p.clamp(1e-9, 1.0)).map(|g| g.sample(rng)).unwrap_or(0)
}

/// Action shape before it is wrapped into a C0 payload.
struct Draft {
    action: ProposedAction,
    scope: Vec<String>,
    keys: Vec<String>,
}

fn pick_low(rng: &mut StreamRng, loads: &[f64]) -> usize {
    let a = rng.random_range(0..loads.len());
    let b = rng.random_range(0..loads.len());
    if loads[a] <= loads[b] {
        a
    } else {
        b
    }
}

fn pick_high(rng: &mut StreamRng, loads: &[f64]) -> usize {
    let a = rng.random_range(0..loads.len());
    let b = rng.random_range(0..loads.len());
    if loads[a] >= loads[b] {
        a
    } else {
        b
    }
}

fn prb(obj: &str) -> String {
    format!("{obj}:prb")
}

fn uc1_draft(t: ActionType, rng: &mut StreamRng, loads: &[f64]) -> Draft {
    let n = loads.len();
    let nb = |i: usize| [(i + n - 1) % n, (i + 1) % n];
    match t {
        ActionType::CellSleep => {
            let i = pick_low(rng, loads);
            let mut keys = vec![prb(&cell_id(i))];
            keys.extend(nb(i).iter().map(|&j| prb(&cell_id(j))));
            Draft {
                action: ProposedAction::new(cell_id(i)).with_param("delta", -1.0),
                scope: vec![cell_id(i)],
                keys,
            }
        }
        ActionType::CellWake => {
            let i = pick_high(rng, loads);
            Draft {
                action: ProposedAction::new(cell_id(i)).with_param("delta", 0.25),
                scope: vec![cell_id(i)],
                keys: vec![prb(&cell_id(i)), format!("c{i}:pwr")],
            }
        }
        ActionType::RfPowerReduce => {
            let i = pick_low(rng, loads);
            let factor = uniform(rng, 0.70, 0.95);
            Draft {
                action: ProposedAction::new(cell_id(i))
                    .with_param("factor", factor)
                    .with_param("delta", factor - 1.0),
                scope: vec![cell_id(i)],
                keys: vec![prb(&cell_id(i)), format!("c{i}:pwr")],
            }
        }
        ActionType::RfReconfig => {
            let i = rng.random_range(0..n);
            let mut shift = uniform(rng, -0.3, 0.3);
            if shift.abs() < 0.05 {
                shift = 0.05f64.copysign(shift);
            }
            let mut keys = vec![prb(&cell_id(i)), format!("c{i}:tilt")];
            keys.extend(nb(i).iter().map(|&j| prb(&cell_id(j))));
            Draft {
                action: ProposedAction::new(cell_id(i)).with_param("delta", shift),
                scope: vec![cell_id(i)],
                keys,
            }
        }
        _ => {
            // LOAD_REDIRECT: target is the receiving cell.
            let dst = pick_low(rng, loads);
            let mut src = pick_high(rng, loads);
            if src == dst {
                src = nb(dst)[rng.random_range(0..2)];
            }
            let f = uniform(rng, 0.10, 0.40);
            Draft {
                action: ProposedAction::new(cell_id(dst))
                    .with_peer(cell_id(src))
                    .with_param("delta", f),
                scope: vec![cell_id(dst), cell_id(src)],
                keys: vec![prb(&cell_id(dst)), prb(&cell_id(src))],
            }
        }
    }
}

fn uc2_draft(t: ActionType, rng: &mut StreamRng, z: &Uc2State) -> Draft {
    let cells = z.cells.len();
    let c = rng.random_range(0..cells);
    let slices = &z.cells[c].slices;
    let ratio = |k: usize| slices[k].demand / slices[k].allocation.max(1e-9);
    let s = if rng.random_bool(0.7) {
        (0..slices.len())
            .max_by(|&a, &b| ratio(a).total_cmp(&ratio(b)))
            .unwrap_or(0)
    } else {
        rng.random_range(0..slices.len())
    };
    let obj = slice_id(c, s);
    match t {
        ActionType::SlicePriorityBoost => Draft {
            action: ProposedAction::new(obj.clone()).with_param("delta", 1.0),
            scope: vec![obj.clone()],
            keys: vec![prb(&obj), format!("c{c}:sched")],
        },
        ActionType::SliceAdmissionRestrict => {
            let factor = uniform(rng, 0.80, 0.95);
            Draft {
                action: ProposedAction::new(obj.clone())
                    .with_param("factor", factor)
                    .with_param("delta", factor - 1.0),
                scope: vec![obj.clone()],
                keys: vec![prb(&obj), format!("{obj}:adm")],
            }
        }
        ActionType::SliceResourceRealloc => {
            let donor = (0..slices.len())
                .filter(|&k| k != s)
                .max_by(|&a, &b| {
                    let spare = |k: usize| slices[k].allocation - slices[k].demand;
                    spare(a).total_cmp(&spare(b))
                })
                .unwrap_or((s + 1) % slices.len());
            let m = uniform(rng, 0.03, 0.12);
            let donor_obj = slice_id(c, donor);
            Draft {
                action: ProposedAction::new(obj.clone())
                    .with_peer(donor_obj.clone())
                    .with_param("delta", m),
                scope: vec![obj.clone(), donor_obj.clone()],
                keys: vec![prb(&obj), prb(&donor_obj), format!("c{c}:sched")],
            }
        }
        ActionType::LoadBalanceUpdate => {
            let peer = (0..cells)
                .filter(|&k| k != c)
                .min_by(|&a, &b| z.cells[a].slices[s].demand.total_cmp(&z.cells[b].slices[s].demand))
                .unwrap_or((c + 1) % cells);
            let f = uniform(rng, 0.10, 0.30);
            let peer_obj = slice_id(peer, s);
            Draft {
                action: ProposedAction::new(obj.clone())
                    .with_peer(peer_obj.clone())
                    .with_param("delta", f),
                scope: vec![obj.clone(), peer_obj.clone()],
                keys: vec![prb(&obj), prb(&peer_obj)],
            }
        }
        _ => Draft {
            action: ProposedAction::new(obj.clone()),
            scope: vec![obj.clone()],
            keys: vec![prb(&obj), format!("{obj}:sla")],
        },
    }
}

fn background_intents(
    rng: &mut StreamRng,
    preset: &ScenarioPreset,
    seed: u64,
    epoch: u64,
    scope: &[String],
    planner_z: &PlannerView,
) -> Vec<ActiveIntent> {
    let mean = preset.probabilities.background_intents.max(0.0);
    // Binomial(4, mean/4) keeps the count bounded.
    let p = (mean / 4.0).min(1.0);
    let count = (0..4).filter(|_| rng.random_bool(p)).count();
    let types = ActionType::for_use_case(preset.uc);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 16 {
        attempts += 1;
        let t = types[rng.random_range(0..types.len())];
        let draft = match planner_z {
            PlannerView::Uc1(loads) => uc1_draft(t, rng, loads),
            PlannerView::Uc2(z) => uc2_draft(t, rng, z),
        };
        if draft.scope.iter().any(|s| scope.contains(s)) {
            continue;
        }
        out.push(ActiveIntent {
            intent_id: format!("bg-{}-{seed}-{epoch}-{}", preset.uc, out.len()),
            intent_type: t,
            direction: draft.action.direction(),
            target_scope: draft.scope,
            resource_keys: draft.keys,
        });
    }
    out
}

/// An intent already live on the candidate's scope, of a different type:
/// incompatible under the conflict matrix.
pub fn incompatible_active(c: &ControlIntent, id: String) -> ActiveIntent {
    let types = ActionType::for_use_case(c.intent_type.use_case());
    let pos = types.iter().position(|t| *t == c.intent_type).unwrap_or(0);
    ActiveIntent {
        intent_id: id,
        intent_type: types[(pos + 1) % types.len()],
        target_scope: c.target_scope.clone(),
        resource_keys: vec![c.resource_keys[0].clone()],
        direction: 0,
    }
}

enum PlannerView {
    Uc1(Vec<f64>),
    Uc2(Uc2State),
}

/// The hidden transition, the labels and the verifier view for one action.
fn evaluate(
    preset: &ScenarioPreset,
    seed: u64,
    epoch: u64,
    intent: &ControlIntent,
) -> (GroundTruth, VerifierView, BTreeMap<String, (f64, f64)>) {
    let mut burst = stream(seed, epoch, "burst");
    let mut noise = stream(seed, epoch, "verifier-noise");
    let dist = &preset.disturbance;
    let n = preset.verifiers.estimate_noise.abs();
    let stress = preset.verifiers.stress_factor.max(0.0);
    let t = intent.intent_type;
    let a = &intent.proposed_action;
    let draw_burst = |rng: &mut StreamRng| {
        if rng.random_bool(dist.burst_prob) {
            uniform(rng, dist.burst_min, dist.burst_max)
        } else {
            0.0
        }
    };

    match preset.uc {
        UseCase::Uc1 => {
            let phys = &preset.topology.uc1;
            let loads = uc1_loads(preset, seed, epoch);
            let z = Uc1State::baseline(&loads);
            let w: Vec<f64> = loads.iter().map(|_| draw_burst(&mut burst)).collect();
            let pre = z.disturbed(&w);
            let post = pre.apply(t, a, phys);
            let cells = z.affected(t, a);
            let safe = phi_uc1(&pre, &post, &cells, preset.predicates.sla_limit, phys);
            let kpi = |s: &Uc1State| EpochKpi::uc1(s, &pre, phys);
            let truth = GroundTruth {
                would_be_safe: safe,
                if_committed: kpi(&post),
                if_idle: kpi(&pre),
            };

            let noisy: Vec<f64> = loads
                .iter()
                .map(|l| stress * l * (1.0 + uniform(&mut noise, -n, n)))
                .collect();
            let zv = Uc1State::baseline(&noisy);
            let post_v = zv.apply(t, a, phys);
            let target = cells.first().copied().unwrap_or(0);
            let view = VerifierView::Uc1 {
                max_load_ratio: post_v.max_load_ratio(&cells, phys),
                tput_change: uc1_tput_change(&zv, &post_v, &cells, phys),
                target_load: noisy.get(target).copied().unwrap_or(0.0),
            };
            let util = loads.iter().enumerate().map(|(i, &l)| (cell_id(i), (l, 1.0))).collect();
            (truth, view, util)
        }
        UseCase::Uc2 => {
            let phys = &preset.topology.uc2;
            let loads = uc2_loads(preset, seed, epoch);
            let z = Uc2State::baseline(&loads, phys);
            let w: Vec<Vec<f64>> = loads
                .iter()
                .map(|row| row.iter().map(|_| draw_burst(&mut burst)).collect())
                .collect();
            let pre = z.disturbed(&w);
            let post = pre.apply(t, a);
            let cells = z.affected(t, a);
            let safe = phi_uc2(&post, &cells, preset.predicates.slice_violation_limit);
            let truth = GroundTruth {
                would_be_safe: safe,
                if_committed: EpochKpi::uc2(&post, &pre),
                if_idle: EpochKpi::uc2(&pre, &pre),
            };

            let noisy: Vec<Vec<f64>> = loads
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|l| stress * l * (1.0 + uniform(&mut noise, -n, n)))
                        .collect()
                })
                .collect();
            let zv = Uc2State::baseline(&noisy, phys);
            let post_v = zv.apply(t, a);
            let target = cells.first().copied().unwrap_or(0);
            let worst_violation = cells
                .iter()
                .flat_map(|&c| post_v.cells[c].violation())
                .fold(0.0, f64::max);
            let view = VerifierView::Uc2 {
                allocations: post_v.cells[target].allocations(),
                guarantees: post_v.cells[target].guarantees(),
                jain: post_v.cells[target].jain(),
                worst_violation,
            };
            let mut util = BTreeMap::new();
            for (c, cell) in z.cells.iter().enumerate() {
                for (s, sl) in cell.slices.iter().enumerate() {
                    util.insert(slice_id(c, s), (sl.demand, sl.allocation));
                }
            }
            (truth, view, util)
        }
    }
}

/// Draws the candidate for `(seed, epoch)` under the preset, before faults.
pub fn generate_candidate(seed: u64, epoch: u64, preset: &ScenarioPreset, config: &ThresholdConfig) -> CandidateIntent {
    let uc = preset.uc;
    let probs = &preset.probabilities;
    let delta = config.delta_epochs(uc.epoch_seconds());
    let now_ms = epoch * uc.epoch_ms();
    let s = |label: &str| stream(seed, epoch, label);

    let mut gap_rng = s("gap");
    let gap = draw_gap(&mut gap_rng, probs.p_stale, delta).min(epoch);
    let state_epoch = epoch - gap;

    let mut type_rng = s("type");
    let types = ActionType::for_use_case(uc);
    let t = WeightedIndex::new(&probs.type_weights)
        .map(|w| types[w.sample(&mut type_rng)])
        .unwrap_or(types[0]);

    let planner_view = match uc {
        UseCase::Uc1 => PlannerView::Uc1(uc1_loads(preset, seed, state_epoch)),
        UseCase::Uc2 => PlannerView::Uc2(Uc2State::baseline(
            &uc2_loads(preset, seed, state_epoch),
            &preset.topology.uc2,
        )),
    };
    let mut target_rng = s("target");
    let draft = match &planner_view {
        PlannerView::Uc1(loads) => uc1_draft(t, &mut target_rng, loads),
        PlannerView::Uc2(z) => uc2_draft(t, &mut target_rng, z),
    };

    // The planner scores against its own (possibly lagged) snapshot and
    // sees neither staleness nor other threads' intents.
    let planner_contention = draft
        .scope
        .iter()
        .map(|obj| match &planner_view {
            PlannerView::Uc1(loads) => crate::scenario::network::parse_object(obj)
                .and_then(|(c, _)| loads.get(c))
                .map_or(0.0, |&l| compute_contention(l, 1.0)),
            PlannerView::Uc2(z) => crate::scenario::network::parse_object(obj)
                .and_then(|(c, s)| z.cells.get(c).and_then(|cell| cell.slices.get(s?)))
                .map_or(0.0, |sl| compute_contention(sl.demand, sl.allocation)),
        })
        .fold(0.0, f64::max);
    let mut planner_rng = s("planner");
    let noise = Normal::new(0.0, preset.planner.risk_noise.max(0.0))
        .map(|d| d.sample(&mut planner_rng))
        .unwrap_or(0.0);
    let [wt, _, _, wn] = config.weights;
    let risk_score = (wt * t.risk_class().phi() + wn * planner_contention + noise).clamp(0.0, 1.0);
    let mut upgrade_rng = s("upgrade");
    let needs_upgrade = risk_score > preset.planner.upgrade_threshold || upgrade_rng.random_bool(probs.p_upg);

    let mut block_rng = s("block");
    let blocking_req: BTreeSet<String> = if block_rng.random_bool(probs.p_block) {
        [format!("prereq/{}-drain", draft.scope[0])].into()
    } else {
        BTreeSet::new()
    };

    let mut deadline_rng = s("deadline");
    let expires_at = if deadline_rng.random_bool(probs.p_late) {
        now_ms - deadline_rng.random_range(1..2000)
    } else {
        let d = probs.deadline_tightness
            * uniform(
                &mut deadline_rng,
                preset.budgets.deadline_lo_s,
                preset.budgets.deadline_hi_s,
            );
        now_ms + (d * 1000.0).round() as u64
    };

    let tx = format!("tx-{uc}-{seed}-{epoch}");
    let rollback_handle =
        (t.reversibility() != crate::contract::ReversibilityClass::Irreversible).then(|| RollbackHandle {
            handle_id: format!("rb-{uc}-{seed}-{epoch}"),
            target_scope: draft.scope[0].clone(),
            policy_version: POLICY_VERSION.to_string(),
            expires_at: now_ms + 600_000,
            procedure_id: format!("{PROCEDURE_PREFIX}{t}"),
            consumed: false,
        });
    let envelope = TransactionEnvelope {
        transaction_id: tx.clone(),
        state_epoch,
        expires_at: expires_at + 30_000,
        idempotency_key: format!("idem-{seed}-{epoch}"),
        visibility_scope: draft.scope.clone(),
        sender_role: "planner".into(),
        receiver_role: "executor".into(),
        policy_digest: POLICY_VERSION.to_string(),
    };
    let intent = ControlIntent {
        intent_type: t,
        proposed_action: draft.action,
        target_scope: draft.scope,
        resource_keys: draft.keys,
        state_epoch,
        expires_at,
        reversibility_class: t.reversibility(),
        risk_score,
        rollback_handle,
        needs_upgrade,
        blocking_req,
        envelope: Some(envelope),
    };

    let mut bg_rng = s("background");
    let mut background = background_intents(&mut bg_rng, preset, seed, epoch, &intent.target_scope, &planner_view);
    let mut conflict_rng = s("conflict");
    if conflict_rng.random_bool(probs.p_conflict) {
        background.push(incompatible_active(&intent, format!("act-{uc}-{seed}-{epoch}")));
    }

    let mut bw_rng = s("bandwidth");
    let bandwidth = bw_rng.random_range(preset.budgets.bandwidth_lo_bytes..=preset.budgets.bandwidth_hi_bytes);
    let mut lat_rng = s("latency");
    let eager_latency_ms = preset.latency_model.quorum_latency(&mut lat_rng);

    let (truth, view, utilization) = evaluate(preset, seed, epoch, &intent);
    CandidateIntent {
        seed,
        epoch,
        intent,
        background,
        bandwidth,
        utilization,
        eager_latency_ms,
        view,
        verifier_fault: None,
        injected_faults: BTreeSet::new(),
        truth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_candidate() {
        let preset = ScenarioPreset::benign(UseCase::Uc1);
        let cfg = ThresholdConfig::uc1();
        let a = generate_candidate(42, 500, &preset, &cfg);
        let b = generate_candidate(42, 500, &preset, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn catalog_partition_respected() {
        for uc in UseCase::ALL {
            let preset = ScenarioPreset::benign(uc);
            let cfg = ThresholdConfig::for_use_case(uc);
            for epoch in 200..400 {
                let c = generate_candidate(3, epoch, &preset, &cfg);
                assert_eq!(c.intent.intent_type.use_case(), uc);
            }
        }
    }

    #[test]
    fn gap_tail_matches_p_stale() {
        let mut rng = stream(1, 0, "gap-test");
        let n = 20_000;
        let stale = (0..n).filter(|_| draw_gap(&mut rng, 0.02, 3) > 3).count();
        let frac = stale as f64 / n as f64;
        assert!((frac - 0.02).abs() < 0.005, "stale fraction {frac}");
    }
}
