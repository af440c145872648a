//! Deterministic scenario engine: load traces, candidate generation, the
//! hidden network model and KPI scoring.

pub mod generator;
pub mod kpi;
pub mod load;
pub mod network;
pub mod preset;

pub use generator::{
    executor_for, generate_candidate, object_ids, start_epoch, CandidateIntent, EpochServices, GroundTruth,
    VerifierView,
};
pub use kpi::{kpi_accumulate, EpochKpi, KpiSummary};
pub use load::LoadModel;
pub use preset::ScenarioPreset;
