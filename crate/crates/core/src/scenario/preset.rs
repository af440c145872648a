//! Scenario preset files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::contract::{ActionType, UseCase};
use crate::error::{Error, Result};
use crate::faults::FaultPlan;
use crate::scenario::load::LoadModel;
use crate::scenario::network::{Uc1Physics, Uc2Physics};
use crate::verifiers::{LatencyModel, VerifierConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Topology {
    pub cells: usize,
    /// Slices per cell; zero for UC1.
    pub slices: usize,
    pub uc1: Uc1Physics,
    pub uc2: Uc2Physics,
}

impl Topology {
    pub fn for_use_case(uc: UseCase) -> Self {
        match uc {
            UseCase::Uc1 => Self {
                cells: 7,
                slices: 0,
                ..Self::default()
            },
            UseCase::Uc2 => Self {
                cells: 3,
                slices: 4,
                ..Self::default()
            },
        }
    }

    /// Objects carrying an independent load trace.
    pub fn load_objects(&self) -> usize {
        self.cells * self.slices.max(1)
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            cells: 7,
            slices: 0,
            uc1: Uc1Physics::default(),
            uc2: Uc2Physics::default(),
        }
    }
}

/// Per-object load bursts hidden from the planner, executor and verifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Disturbance {
    pub burst_prob: f64,
    pub burst_min: f64,
    pub burst_max: f64,
}

impl Default for Disturbance {
    fn default() -> Self {
        Self {
            burst_prob: 0.05,
            burst_min: 0.10,
            burst_max: 0.50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Probabilities {
    /// P(epoch gap > δ) for the natural staleness draw.
    pub p_stale: f64,
    /// P(an incompatible intent is already active on the target).
    pub p_conflict: f64,
    pub p_block: f64,
    /// Spontaneous planner upgrade requests.
    pub p_upg: f64,
    /// P(the intent arrives already expired).
    pub p_late: f64,
    /// Scales the deadline window; smaller is tighter.
    pub deadline_tightness: f64,
    /// Mean number of unrelated active intents from other planner threads.
    pub background_intents: f64,
    /// Relative weights over the use case's action types, catalog order.
    pub type_weights: Vec<f64>,
}

impl Default for Probabilities {
    fn default() -> Self {
        Self {
            p_stale: 0.02,
            p_conflict: 0.10,
            p_block: 0.05,
            p_upg: 0.05,
            p_late: 0.0005,
            deadline_tightness: 0.50,
            background_intents: 0.75,
            type_weights: vec![1.0; 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerModel {
    /// Std-dev of the planner's own risk estimate noise.
    pub risk_noise: f64,
    /// Planner asks for evidence above this self-assessed risk.
    pub upgrade_threshold: f64,
}

impl Default for PlannerModel {
    fn default() -> Self {
        Self {
            risk_noise: 0.02,
            upgrade_threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BudgetModel {
    /// Deadline window before tightness scaling, seconds.
    pub deadline_lo_s: f64,
    pub deadline_hi_s: f64,
    pub bandwidth_lo_bytes: u64,
    pub bandwidth_hi_bytes: u64,
}

impl Default for BudgetModel {
    fn default() -> Self {
        Self {
            deadline_lo_s: 24.0,
            deadline_hi_s: 120.0,
            bandwidth_lo_bytes: 256,
            bandwidth_hi_bytes: 10240,
        }
    }
}

/// Byte-model knobs: how much evidence a C1 fetch carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ByteModel {
    pub max_constraints: usize,
}

impl Default for ByteModel {
    fn default() -> Self {
        Self { max_constraints: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Predicates {
    /// UC1: max tolerated served-traffic drop.
    pub sla_limit: f64,
    /// UC2: max tolerated per-slice violation rate.
    pub slice_violation_limit: f64,
}

impl Default for Predicates {
    fn default() -> Self {
        Self {
            sla_limit: 0.10,
            slice_violation_limit: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioPreset {
    pub name: String,
    pub uc: UseCase,
    pub topology: Topology,
    pub load: LoadModel,
    pub disturbance: Disturbance,
    pub probabilities: Probabilities,
    pub planner: PlannerModel,
    pub budgets: BudgetModel,
    pub latency_model: LatencyModel,
    pub byte_model: ByteModel,
    pub predicates: Predicates,
    pub verifiers: VerifierConfig,
    pub faults: FaultPlan,
}

impl Default for ScenarioPreset {
    fn default() -> Self {
        Self::benign(UseCase::Uc1)
    }
}

impl ScenarioPreset {
    /// The nominal operating point for a use case.
    pub fn benign(uc: UseCase) -> Self {
        let stress_factor = 1.15;
        let (probabilities, planner, budgets, disturbance, load) = match uc {
            UseCase::Uc1 => (
                Probabilities {
                    type_weights: vec![0.34, 0.05, 0.05, 0.22, 0.34],
                    ..Probabilities::default()
                },
                PlannerModel {
                    upgrade_threshold: 0.22,
                    ..PlannerModel::default()
                },
                BudgetModel::default(),
                Disturbance::default(),
                LoadModel {
                    mean: 0.52,
                    amplitude: 0.30,
                    ..LoadModel::default()
                },
            ),
            UseCase::Uc2 => (
                Probabilities {
                    p_late: 0.044,
                    type_weights: vec![0.05, 0.32, 0.22, 0.36, 0.05],
                    ..Probabilities::default()
                },
                PlannerModel::default(),
                BudgetModel {
                    deadline_lo_s: 3.0,
                    deadline_hi_s: 50.0,
                    bandwidth_lo_bytes: 128,
                    bandwidth_hi_bytes: 5120,
                },
                Disturbance::default(),
                LoadModel::default(),
            ),
        };
        Self {
            name: "benign".to_string(),
            uc,
            topology: Topology::for_use_case(uc),
            load,
            disturbance,
            probabilities,
            planner,
            budgets,
            latency_model: LatencyModel::default(),
            byte_model: ByteModel::default(),
            predicates: Predicates::default(),
            verifiers: VerifierConfig {
                stress_factor,
                ..VerifierConfig::default()
            },
            faults: FaultPlan::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.probabilities;
        let probs = [
            ("p_stale", p.p_stale),
            ("p_conflict", p.p_conflict),
            ("p_block", p.p_block),
            ("p_upg", p.p_upg),
            ("p_late", p.p_late),
            ("burst_prob", self.disturbance.burst_prob),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("{name} = {v} is not a probability")));
            }
        }
        if p.p_stale >= 1.0 {
            return Err(Error::InvalidConfig("p_stale must be below 1".into()));
        }
        if p.type_weights.len() != ActionType::for_use_case(self.uc).len()
            || p.type_weights.iter().any(|w| *w < 0.0)
            || p.type_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::InvalidConfig(
                "type_weights must be five non-negative weights".into(),
            ));
        }
        let expected_slices = match self.uc {
            UseCase::Uc1 => 0,
            UseCase::Uc2 => self.topology.uc2.allocations.len(),
        };
        if self.topology.slices != expected_slices || self.topology.cells < 3 {
            return Err(Error::InvalidConfig("topology does not match the use case".into()));
        }
        if self.uc == UseCase::Uc2 && self.topology.uc2.allocations.iter().sum::<f64>() > 1.0 + 1e-9 {
            return Err(Error::InvalidConfig("slice allocations exceed cell capacity".into()));
        }
        if self.budgets.deadline_lo_s > self.budgets.deadline_hi_s
            || self.budgets.bandwidth_lo_bytes > self.budgets.bandwidth_hi_bytes
        {
            return Err(Error::InvalidConfig("budget ranges are inverted".into()));
        }
        self.faults.validate()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let preset: Self = serde_json::from_str(s)?;
        preset.validate()?;
        Ok(preset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}
