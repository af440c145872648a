//! Executor-side actuation contract for supervisory control intents.
//!
//! A planner hands the executor a compact C0 intent. The executor triages it
//! locally and either commits, rejects, or gates it; gated intents are
//! resolved from on-demand C1 evidence and a verifier quorum, or by a narrow
//! degraded-mode rule when the budget does not allow retrieval. Committed
//! stage-2 and degraded actions leave a C2 provenance digest.
//!
//! The crate also carries a deterministic scenario engine and the benchmark
//! drivers used to compare the contract against its baselines.

pub mod audit;
pub mod campaign;
pub mod comparators;
pub mod contract;
pub mod error;
pub mod executor;
pub mod faults;
pub mod metrics;
pub mod par;
pub mod risk;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod verifiers;

pub use error::{Error, Result};
