//! Verifier quorum and the four domain verifiers.
//!
//! Verifiers only ever see estimates prepared by the caller; they have no
//! access to scenario ground truth.

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::contract::UseCase;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Approve,
    Veto,
    Abstain,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Approve => "APPROVE",
            Verdict::Veto => "VETO",
            Verdict::Abstain => "ABSTAIN",
        }
    }

    /// APPROVE and VETO swap; ABSTAIN is left alone.
    pub fn flipped(self) -> Self {
        match self {
            Verdict::Approve => Verdict::Veto,
            Verdict::Veto => Verdict::Approve,
            Verdict::Abstain => Verdict::Abstain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub verdict: Verdict,
    pub verifier_id: String,
    pub rationale: String,
}

impl Vote {
    pub fn new(verifier_id: &str, verdict: Verdict, rationale: impl Into<String>) -> Self {
        Self {
            verdict,
            verifier_id: verifier_id.to_string(),
            rationale: rationale.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuorumOutcome {
    Approved,
    Conflict,
    Escalate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuorumResult {
    pub outcome: QuorumOutcome,
    pub votes: Vec<Vote>,
}

/// Unanimous approval, any veto rejects, anything else escalates.
pub fn quorum(votes: Vec<Vote>) -> Result<QuorumResult> {
    if votes.is_empty() {
        return Err(Error::EmptyVoteVector);
    }
    let outcome = if votes.iter().any(|v| v.verdict == Verdict::Veto) {
        QuorumOutcome::Conflict
    } else if votes.iter().all(|v| v.verdict == Verdict::Approve) {
        QuorumOutcome::Approved
    } else {
        QuorumOutcome::Escalate
    };
    Ok(QuorumResult { outcome, votes })
}

/// Verifier margins. Bands are absolute widths below the veto line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifierConfig {
    /// Max post-action load as a fraction of capacity.
    pub load_margin: f64,
    pub load_band: f64,
    /// Max acceptable throughput drop (fraction).
    pub sla_margin: f64,
    pub sla_band: f64,
    pub fairness_threshold: f64,
    pub fairness_band: f64,
    /// Half-width of the uniform relative noise on verifier estimates.
    pub estimate_noise: f64,
    /// Verifiers score the action against demand scaled by this factor,
    /// a robustness margin for growth they cannot observe.
    pub stress_factor: f64,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        Self {
            load_margin: 0.90,
            load_band: 0.05,
            sla_margin: 0.05,
            sla_band: 0.02,
            fairness_threshold: 0.75,
            fairness_band: 0.02,
            estimate_noise: 0.05,
            stress_factor: 1.0,
        }
    }
}

/// Three-way threshold: above `veto_above` vetoes, at or below
/// `veto_above - band` approves, in between abstains.
fn banded(id: &str, value: f64, veto_above: f64, band: f64, what: &str) -> Vote {
    if value > veto_above {
        Vote::new(id, Verdict::Veto, format!("{what} {value:.3} > {veto_above:.3}"))
    } else if value <= veto_above - band {
        Vote::new(id, Verdict::Approve, format!("{what} {value:.3} within margin"))
    } else {
        Vote::new(id, Verdict::Abstain, format!("{what} {value:.3} in hysteresis band"))
    }
}

/// Verifier ids of the two-member panel for each use case.
pub fn panel(uc: UseCase) -> [&'static str; 2] {
    match uc {
        UseCase::Uc1 => ["uc1-load", "uc1-sla"],
        UseCase::Uc2 => ["uc2-isolation", "uc2-fairness"],
    }
}

/// `max_load_ratio`: worst estimated post-action load/capacity over the
/// affected cells.
pub fn uc1_load_verifier(max_load_ratio: f64, cfg: &VerifierConfig) -> Vote {
    banded("uc1-load", max_load_ratio, cfg.load_margin, cfg.load_band, "load ratio")
}

/// `tput_change`: predicted relative per-user throughput change (negative
/// is a drop).
pub fn uc1_sla_verifier(tput_change: f64, cfg: &VerifierConfig) -> Vote {
    banded("uc1-sla", -tput_change, cfg.sla_margin, cfg.sla_band, "throughput drop")
}

/// Vetoes if any slice allocation falls below its guarantee; equality passes.
pub fn uc2_isolation_verifier(allocations: &[f64], guarantees: &[f64]) -> Vote {
    let breach = allocations.iter().zip(guarantees).enumerate().find(|(_, (a, g))| a < g);
    match breach {
        Some((i, (a, g))) => Vote::new(
            "uc2-isolation",
            Verdict::Veto,
            format!("slice {i} allocation {a:.3} < guarantee {g:.3}"),
        ),
        None => Vote::new("uc2-isolation", Verdict::Approve, "all guarantees met"),
    }
}

/// Jain fairness index `(Σx)² / (n·Σx²)`.
pub fn jain_index(allocations: &[f64]) -> Result<f64> {
    let sum: f64 = allocations.iter().sum();
    let sum_sq: f64 = allocations.iter().map(|x| x * x).sum();
    if allocations.is_empty() || sum_sq == 0.0 {
        return Err(Error::AllZeroAllocation);
    }
    Ok(sum * sum / (allocations.len() as f64 * sum_sq))
}

/// Vetoes if the post-action Jain index drops below the threshold.
pub fn uc2_fairness_verifier(jain: f64, cfg: &VerifierConfig) -> Vote {
    let id = "uc2-fairness";
    if jain < cfg.fairness_threshold {
        Vote::new(id, Verdict::Veto, format!("jain {jain:.3} below threshold"))
    } else if jain < cfg.fairness_threshold + cfg.fairness_band {
        Vote::new(id, Verdict::Abstain, format!("jain {jain:.3} in hysteresis band"))
    } else {
        Vote::new(id, Verdict::Approve, format!("jain {jain:.3}"))
    }
}

/// Combined C1-fetch plus quorum latency: lognormal with the given mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyModel {
    pub local_ms: f64,
    pub eager_mean_ms: f64,
    pub eager_sigma: f64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            local_ms: 10.0,
            eager_mean_ms: 1800.0,
            eager_sigma: 0.25,
        }
    }
}

impl LatencyModel {
    fn distribution(&self) -> LogNormal<f64> {
        let sigma = self.eager_sigma.max(1e-9);
        let mu = self.eager_mean_ms.ln() - sigma * sigma / 2.0;
        LogNormal::new(mu, sigma).expect("sigma is positive")
    }

    pub fn quorum_latency<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.distribution().sample(rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(verdict: Verdict) -> Vote {
        Vote::new("t", verdict, "")
    }

    #[test]
    fn quorum_cases() {
        use Verdict::*;
        let outcome = |vs: &[Verdict]| quorum(vs.iter().map(|&x| v(x)).collect()).unwrap().outcome;
        assert_eq!(outcome(&[Approve, Approve]), QuorumOutcome::Approved);
        assert_eq!(outcome(&[Approve, Veto]), QuorumOutcome::Conflict);
        assert_eq!(outcome(&[Abstain, Approve]), QuorumOutcome::Escalate);
        assert_eq!(outcome(&[Veto, Abstain]), QuorumOutcome::Conflict);
        assert!(matches!(quorum(vec![]), Err(Error::EmptyVoteVector)));
    }

    #[test]
    fn load_verifier_bands() {
        let cfg = VerifierConfig::default();
        assert_eq!(uc1_load_verifier(0.95, &cfg).verdict, Verdict::Veto);
        assert_eq!(uc1_load_verifier(0.5, &cfg).verdict, Verdict::Approve);
        assert_eq!(uc1_load_verifier(0.87, &cfg).verdict, Verdict::Abstain);
        assert_eq!(uc1_load_verifier(0.90, &cfg).verdict, Verdict::Abstain);
    }

    #[test]
    fn sla_verifier_bands() {
        let cfg = VerifierConfig::default();
        assert_eq!(uc1_sla_verifier(-0.08, &cfg).verdict, Verdict::Veto);
        assert_eq!(uc1_sla_verifier(-0.04, &cfg).verdict, Verdict::Abstain);
        assert_eq!(uc1_sla_verifier(0.02, &cfg).verdict, Verdict::Approve);
    }

    #[test]
    fn isolation_boundary_is_inclusive() {
        let g = [0.3, 0.2];
        assert_eq!(uc2_isolation_verifier(&[0.4, 0.25], &g).verdict, Verdict::Approve);
        assert_eq!(uc2_isolation_verifier(&[0.24, 0.25], &g).verdict, Verdict::Veto);
        assert_eq!(uc2_isolation_verifier(&[0.3, 0.2], &g).verdict, Verdict::Approve);
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&[5.0, 5.0, 5.0, 5.0]).unwrap(), 1.0);
        assert_eq!(jain_index(&[1.0, 0.0]).unwrap(), 0.5);
        assert!((jain_index(&[3.0, 1.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(matches!(jain_index(&[0.0, 0.0]), Err(Error::AllZeroAllocation)));
        assert!(jain_index(&[]).is_err());
    }

    #[test]
    fn fairness_verifier_bands() {
        let cfg = VerifierConfig::default();
        assert_eq!(uc2_fairness_verifier(0.70, &cfg).verdict, Verdict::Veto);
        assert_eq!(uc2_fairness_verifier(0.76, &cfg).verdict, Verdict::Abstain);
        assert_eq!(uc2_fairness_verifier(0.90, &cfg).verdict, Verdict::Approve);
    }

    #[test]
    fn latency_is_positive_and_seeded() {
        let model = LatencyModel::default();
        let mut a = crate::rng::stream(7, 0, "latency");
        let mut b = crate::rng::stream(7, 0, "latency");
        for _ in 0..100 {
            let x = model.quorum_latency(&mut a);
            assert!(x > 0.0);
            assert_eq!(x, model.quorum_latency(&mut b));
        }
    }
}
