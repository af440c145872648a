//! Per-run metric accumulation.
//!
//! Runs are merged by summing [`RunCounts`], never by averaging rates.

use serde::{Deserialize, Serialize};

use crate::audit::AuditKind;
use crate::contract::{ProposedAction, Stage1Decision};
use crate::executor::DecisionRecord;
use crate::scenario::kpi::EpochKpi;

/// One scored epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochOutcome {
    pub record: DecisionRecord,
    /// Truth label for the candidate's action; only meaningful on commit.
    pub would_be_safe: bool,
    /// The candidate arrived with an epoch gap above δ.
    pub stale: bool,
    pub kpi: EpochKpi,
    /// Present iff the terminal decision is COMMIT.
    pub committed_action: Option<ProposedAction>,
}

/// Raw counters; every rate in [`RunMetrics`] is a ratio of two of these.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunCounts {
    pub epochs: u64,
    pub commits: u64,
    /// Commits decided from C0 alone, without any evidence retrieval.
    pub c0_commits: u64,
    pub stage2_commits: u64,
    pub degraded_commits: u64,
    pub degraded_entries: u64,
    pub gated: u64,
    pub unsafe_commits: u64,
    pub c0_unsafe: u64,
    pub stage2_unsafe: u64,
    pub safe_commits: u64,
    pub stale_candidates: u64,
    pub stale_rejected: u64,
    pub c1_fetches: u64,
    pub full_c2_commits: u64,
    pub commit_latency_ms: f64,
    pub bytes_total: u64,
}

impl RunCounts {
    pub fn merge(&mut self, o: &RunCounts) {
        self.epochs += o.epochs;
        self.commits += o.commits;
        self.c0_commits += o.c0_commits;
        self.stage2_commits += o.stage2_commits;
        self.degraded_commits += o.degraded_commits;
        self.degraded_entries += o.degraded_entries;
        self.gated += o.gated;
        self.unsafe_commits += o.unsafe_commits;
        self.c0_unsafe += o.c0_unsafe;
        self.stage2_unsafe += o.stage2_unsafe;
        self.safe_commits += o.safe_commits;
        self.stale_candidates += o.stale_candidates;
        self.stale_rejected += o.stale_rejected;
        self.c1_fetches += o.c1_fetches;
        self.full_c2_commits += o.full_c2_commits;
        self.commit_latency_ms += o.commit_latency_ms;
        self.bytes_total += o.bytes_total;
    }

    pub fn add(&mut self, o: &EpochOutcome) {
        let r = &o.record;
        let committed = r.committed();
        let entered_degraded = r.path_trace.iter().any(|s| s == "degraded");
        self.epochs += 1;
        self.bytes_total += r.bytes_charged;
        self.c1_fetches += u64::from(r.c1_fetched);
        self.gated += u64::from(r.decision.stage1 == Stage1Decision::Gate);
        self.degraded_entries += u64::from(entered_degraded);
        if o.stale {
            self.stale_candidates += 1;
            self.stale_rejected += u64::from(r.stage1_reject());
        }
        if !committed {
            return;
        }
        let is_c0 = r.stage1_commit() && !r.c1_fetched;
        self.commits += 1;
        self.commit_latency_ms += r.latency_ms;
        self.c0_commits += u64::from(is_c0);
        self.stage2_commits += u64::from(!is_c0);
        self.degraded_commits += u64::from(r.decision.degraded);
        self.full_c2_commits += u64::from(r.audit_kind == AuditKind::FullC2);
        if o.would_be_safe {
            self.safe_commits += 1;
        } else {
            self.unsafe_commits += 1;
            self.c0_unsafe += u64::from(is_c0);
            self.stage2_unsafe += u64::from(!is_c0);
        }
    }
}

/// Rates derived from [`RunCounts`]. Undefined ratios are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ttfsa_mean_ms: Option<f64>,
    pub bytes_per_commit: Option<f64>,
    pub unsafe_rate: Option<f64>,
    pub stale_rejection_rate: Option<f64>,
    pub yield_rate: f64,
    pub c0_commit_share: Option<f64>,
    pub upgrade_freq: f64,
    pub full_c2_coverage: Option<f64>,
    pub c0_unsafe_rate: Option<f64>,
    pub stage2_unsafe_rate: Option<f64>,
    pub stage2_branch_rate: f64,
    pub degraded_branch_entry_rate: f64,
    pub degraded_commit_count: u64,
}

fn ratio(num: f64, den: u64) -> Option<f64> {
    (den > 0).then(|| num / den as f64)
}

impl RunMetrics {
    pub fn from_counts(k: &RunCounts) -> Self {
        let epochs = k.epochs.max(1) as f64;
        Self {
            ttfsa_mean_ms: ratio(k.commit_latency_ms, k.commits),
            bytes_per_commit: ratio(k.bytes_total as f64, k.commits),
            unsafe_rate: ratio(k.unsafe_commits as f64, k.commits),
            stale_rejection_rate: ratio(k.stale_rejected as f64, k.stale_candidates),
            yield_rate: k.safe_commits as f64 / epochs,
            c0_commit_share: ratio(k.c0_commits as f64, k.commits),
            upgrade_freq: k.c1_fetches as f64 / epochs,
            full_c2_coverage: ratio(k.full_c2_commits as f64, k.commits),
            c0_unsafe_rate: ratio(k.c0_unsafe as f64, k.c0_commits),
            stage2_unsafe_rate: ratio(k.stage2_unsafe as f64, k.stage2_commits),
            stage2_branch_rate: k.gated as f64 / epochs,
            degraded_branch_entry_rate: k.degraded_entries as f64 / epochs,
            degraded_commit_count: k.degraded_commits,
        }
    }
}

pub fn count(outcomes: &[EpochOutcome]) -> RunCounts {
    let mut k = RunCounts::default();
    for o in outcomes {
        k.add(o);
    }
    k
}

pub fn accumulate(outcomes: &[EpochOutcome]) -> RunMetrics {
    RunMetrics::from_counts(&count(outcomes))
}
