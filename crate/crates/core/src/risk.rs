//! Composite risk score and its normalized inputs.

use serde::{Deserialize, Serialize};

use crate::contract::{ControlIntent, ReversibilityClass};
use crate::executor::{ActiveIntent, ExecutorState};

/// Executor-observable transaction state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionState {
    pub r_t: f64,
    pub d_t: f64,
    pub b_t: u64,
    pub c_t: f64,
    pub sigma_t: u64,
    pub rho_t: ReversibilityClass,
}

/// The four normalized inputs of the composite score, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskInputs {
    pub phi: f64,
    pub sigma_hat: f64,
    pub c_hat: f64,
    pub n_hat: f64,
}

impl RiskInputs {
    pub fn score(&self, weights: &[f64; 4]) -> f64 {
        let [wt, ws, wc, wn] = *weights;
        let r = wt * self.phi + ws * self.sigma_hat + wc * self.c_hat + wn * self.n_hat;
        r.clamp(0.0, 1.0)
    }
}

pub fn epoch_gap(exec_epoch: u64, intent_epoch: u64) -> u64 {
    exec_epoch.abs_diff(intent_epoch)
}

/// `min(gap / delta, 1)`; saturates at exactly 1 once the gap reaches delta.
pub fn compute_staleness_hat(exec_epoch: u64, intent_epoch: u64, delta_epochs: u64) -> f64 {
    let delta = delta_epochs.max(1);
    let gap = epoch_gap(exec_epoch, intent_epoch);
    if gap >= delta {
        1.0
    } else {
        gap as f64 / delta as f64
    }
}

/// Share of active intents overlapping the intent's resource keys, relative
/// to `uc_max` and capped at 1.
pub fn compute_conflict_intensity(intent: &ControlIntent, registry: &[ActiveIntent], uc_max: usize) -> f64 {
    let overlapping = registry
        .iter()
        .filter(|a| intent.shares_resource_with(&a.resource_keys))
        .count();
    (overlapping as f64 / uc_max.max(1) as f64).min(1.0)
}

pub fn compute_contention(util: f64, capacity: f64) -> f64 {
    if capacity <= 0.0 {
        return 1.0;
    }
    (util.max(0.0) / capacity).min(1.0)
}

/// Local inputs for an intent under the executor's own view.
pub fn risk_inputs(c: &ControlIntent, exec: &ExecutorState) -> RiskInputs {
    RiskInputs {
        phi: c.intent_type.risk_class().phi(),
        sigma_hat: compute_staleness_hat(exec.epoch, c.state_epoch, exec.delta_epochs()),
        c_hat: compute_conflict_intensity(c, &exec.active_intents, exec.uc.conflict_max()),
        n_hat: exec.contention_for(c),
    }
}

/// r_ℓ: the composite score recomputed from executor-local state.
pub fn compute_risk(c: &ControlIntent, exec: &ExecutorState) -> f64 {
    risk_inputs(c, exec).score(&exec.config.weights)
}
