//! Post-hoc audit emission. Runs strictly after the decision and never feeds
//! back into it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contract::{
    encode_c0, serialize_c2, ControlIntent, CoordinationEvidence, Decision, ProvenanceDigest, ReversibilityClass,
    TerminalDecision,
};
use crate::error::Result;
use crate::executor::DecisionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AuditKind {
    FullC2,
    Minimal,
}

impl AuditKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AuditKind::FullC2 => "FULL_C2",
            AuditKind::Minimal => "MINIMAL",
        }
    }
}

/// Version strings stamped into every digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VersionInfo {
    pub tool_version: String,
    pub model_version: String,
    pub policy_version: String,
    pub verifier_version: String,
    pub dependency_hashes: Vec<String>,
}

impl Default for VersionInfo {
    fn default() -> Self {
        Self {
            tool_version: concat!("intentgate/", env!("CARGO_PKG_VERSION")).to_string(),
            model_version: "synthetic-planner/1".to_string(),
            policy_version: "policy/1".to_string(),
            verifier_version: "verifier-panel/1".to_string(),
            dependency_hashes: Vec::new(),
        }
        .with_component_hashes()
    }
}

impl VersionInfo {
    /// One hash per pinned component: the build manifest and each version
    /// string, in that order.
    pub fn with_component_hashes(mut self) -> Self {
        let mut hashes = vec![hex(&Sha256::digest(include_str!("../Cargo.toml").as_bytes()))];
        for v in [
            &self.tool_version,
            &self.model_version,
            &self.policy_version,
            &self.verifier_version,
        ] {
            hashes.push(hex(&Sha256::digest(v.as_bytes())));
        }
        self.dependency_hashes = hashes;
        self
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write as _;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Stage-2 and degraded commits get a full digest; everything else keeps
/// only the minimal transaction record.
pub fn audit_kind(d: &Decision) -> AuditKind {
    if d.terminal == TerminalDecision::Commit && d.stage2.is_some() {
        AuditKind::FullC2
    } else {
        AuditKind::Minimal
    }
}

pub fn build_digest(
    c: &ControlIntent,
    decided_at_ms: u64,
    evidence: Option<&CoordinationEvidence>,
    versions: &VersionInfo,
) -> ProvenanceDigest {
    let tx = c.intent_id();
    // Performance and configuration snapshots per resource key at the
    // planner's epoch, plus the executor-side snapshots the evidence was
    // cut from.
    let mut snapshots: Vec<String> = c
        .resource_keys
        .iter()
        .flat_map(|k| ["pm", "cm"].map(|plane| format!("telemetry/{plane}/{k}/epoch-{}", c.state_epoch)))
        .collect();
    let mut uris = vec![
        format!("audit://{tx}/c0"),
        format!("audit://{tx}/envelope"),
        format!("audit://{tx}/decision"),
    ];
    if let Some(h) = &c.rollback_handle {
        uris.push(format!("audit://{tx}/rollback/{}", h.handle_id));
    }
    if let Some(ev) = evidence {
        snapshots.extend(c.resource_keys.iter().flat_map(|o| {
            ["pm", "cm", "fm"].map(|plane| format!("telemetry/{plane}/{o}/epoch-{}", ev.snapshot_epoch))
        }));
        uris.push(format!("audit://{tx}/c1"));
        uris.extend(versions_verifier_uris(&tx, versions));
    }
    let c0_hash = Sha256::digest(encode_c0(c));
    let decision_hash = Sha256::digest(format!("{tx}|{decided_at_ms}").as_bytes());
    let retention_class = match c.reversibility_class {
        ReversibilityClass::Reversible => crate::contract::RetentionClass::Standard,
        _ => crate::contract::RetentionClass::Extended,
    };
    // Pinned components first, then every input artifact the decision used.
    let mut deps = versions.dependency_hashes.clone();
    if let Some(h) = &c.rollback_handle {
        deps.push(hex(&Sha256::digest(h.procedure_id.as_bytes())));
    }
    deps.push(hex(&c0_hash));
    if let Some(ev) = evidence {
        deps.push(hex(&Sha256::digest(crate::contract::encode_c1(ev))));
    }
    ProvenanceDigest {
        transaction_id: tx,
        decided_at_ms,
        generated_at_ms: decided_at_ms + 1,
        telemetry_snapshot_ids: snapshots,
        tool_version: versions.tool_version.clone(),
        model_version: versions.model_version.clone(),
        policy_version: versions.policy_version.clone(),
        verifier_version: versions.verifier_version.clone(),
        dependency_hashes: deps,
        signature: format!("{}{}", hex(&c0_hash), hex(&decision_hash)),
        evidence_uris: uris,
        retention_class,
    }
}

fn versions_verifier_uris(tx: &str, versions: &VersionInfo) -> Vec<String> {
    ["votes", "quorum"]
        .iter()
        .map(|what| format!("audit://{tx}/{what}?panel={}", versions.verifier_version))
        .collect()
}

/// Serialized C2 size for the byte model.
pub fn c2_len(
    c: &ControlIntent,
    decided_at_ms: u64,
    evidence: Option<&CoordinationEvidence>,
    versions: &VersionInfo,
) -> u64 {
    serialize_c2(&build_digest(c, decided_at_ms, evidence, versions)).len() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub kind: AuditKind,
    pub transaction_id: String,
    pub epoch: u64,
    pub terminal: TerminalDecision,
    pub decided_at_ms: u64,
    pub emitted_at_ms: u64,
    pub digest: Option<ProvenanceDigest>,
}

/// Builds the audit entry for a finished decision. Emission time is
/// strictly after the decision time.
pub fn emit_audit(
    record: &DecisionRecord,
    c: &ControlIntent,
    evidence: Option<&CoordinationEvidence>,
    versions: &VersionInfo,
) -> AuditEntry {
    let digest = match record.audit_kind {
        AuditKind::FullC2 => Some(build_digest(c, record.decided_at_ms, evidence, versions)),
        AuditKind::Minimal => None,
    };
    AuditEntry {
        kind: record.audit_kind,
        transaction_id: record.intent_id.clone(),
        epoch: record.epoch,
        terminal: record.decision.terminal,
        decided_at_ms: record.decided_at_ms,
        emitted_at_ms: record.decided_at_ms + 1,
        digest,
    }
}

pub trait AuditSink {
    fn emit(&mut self, entry: AuditEntry);
}

/// In-memory store.
#[derive(Debug, Default, Clone)]
pub struct MemoryAudit {
    pub entries: Vec<AuditEntry>,
}

impl AuditSink for MemoryAudit {
    fn emit(&mut self, entry: AuditEntry) {
        self.entries.push(entry);
    }
}

impl MemoryAudit {
    /// Full-digest commits over all commits; `None` without commits.
    pub fn full_c2_coverage(&self) -> Option<f64> {
        let commits = self
            .entries
            .iter()
            .filter(|e| e.terminal == TerminalDecision::Commit)
            .count();
        let full = self.entries.iter().filter(|e| e.kind == AuditKind::FullC2).count();
        (commits > 0).then(|| full as f64 / commits as f64)
    }

    /// Appends every entry as one JSON line.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}
