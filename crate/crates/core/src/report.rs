//! Machine-readable and plain-text analysis reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::cooccur::{vectors_to_json, CooccurrenceJson, VectorJson};
use crate::diagnostics::SweepJson;
use crate::divergence::{DistanceJson, DistanceKind, LOG_BASE};
use crate::fmt::G17;
use crate::hac::DendrogramJson;
use crate::ingest::DataQuality;
use crate::patch_impact::REPORT_SCHEMA_VERSION;
use crate::pipeline::{AnalysisSnapshot, KSource};

/// Identifies the exact inputs and options behind a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Fingerprint {
    pub tool: String,
    pub version: String,
    /// Hex SHA-256 of each input file, in the order given.
    pub input_sha256: Vec<String>,
    /// Option name to value.
    pub options: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssignmentJson {
    pub agent: String,
    pub cluster: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub label: String,
    pub fingerprint: Fingerprint,
    pub log_base: u32,
    pub data_quality: DataQuality,
    pub compositions: usize,
    pub roster: Vec<String>,
    pub excluded_agents: Vec<String>,
    pub cooccurrence: Option<CooccurrenceJson>,
    pub probability_vectors: Vec<VectorJson>,
    pub distance_matrix: DistanceJson,
    pub dendrogram: DendrogramJson,
    pub silhouette_sweep: SweepJson,
    pub chosen_k: usize,
    pub k_source: KSource,
    pub chosen_k_silhouette: G17,
    pub assignment: Vec<AssignmentJson>,
    pub clusters: Vec<Vec<String>>,
}

impl AnalysisReport {
    pub fn new(snapshot: &AnalysisSnapshot, quality: DataQuality, fingerprint: Fingerprint) -> Self {
        let assignment = &snapshot.assignment;
        AnalysisReport {
            schema_version: REPORT_SCHEMA_VERSION,
            label: snapshot.label.clone(),
            fingerprint,
            log_base: LOG_BASE,
            data_quality: quality,
            compositions: snapshot.compositions,
            roster: snapshot.roster.names().to_vec(),
            excluded_agents: snapshot.excluded.clone(),
            cooccurrence: snapshot.cooccurrence.as_ref().map(|m| m.to_json()),
            probability_vectors: vectors_to_json(&snapshot.vectors),
            distance_matrix: snapshot.distances.to_json(),
            dendrogram: snapshot.dendrogram.to_json(),
            silhouette_sweep: snapshot.sweep.to_json(),
            chosen_k: snapshot.k,
            k_source: snapshot.k_source,
            chosen_k_silhouette: G17(snapshot.sweep.score(snapshot.k).unwrap_or(f64::NAN)),
            assignment: assignment
                .agents()
                .iter()
                .zip(assignment.labels())
                .map(|(a, &c)| AssignmentJson {
                    agent: a.clone(),
                    cluster: c,
                })
                .collect(),
            clusters: assignment.clusters(),
        }
    }
}

/// Short human-readable summary of one analysis.
pub fn render_summary(snapshot: &AnalysisSnapshot, quality: &DataQuality) -> String {
    let mut out = String::new();
    let title = if snapshot.label.is_empty() {
        "analysis"
    } else {
        &snapshot.label
    };
    let _ = writeln!(out, "# Agent clusters: {title}\n");
    let _ = writeln!(
        out,
        "{} compositions, {} agents ({} clustered). Divergence: {}, log base {LOG_BASE}.",
        snapshot.compositions,
        snapshot.roster.len(),
        snapshot.clustered_agents().len(),
        match snapshot.distances.kind() {
            DistanceKind::Jsd => "JSD",
            DistanceKind::SqrtJsd => "square root of JSD",
        }
    );
    if !snapshot.excluded.is_empty() {
        let _ = writeln!(out, "Excluded (never picked): {}", snapshot.excluded.join(", "));
    }
    if !quality.skipped.is_empty() {
        let _ = writeln!(out, "Skipped {} invalid rows/groups.", quality.skipped.len());
    }
    let source = match snapshot.k_source {
        KSource::Silhouette => "best mean silhouette",
        KSource::Override => "fixed by --k",
    };
    let _ = writeln!(
        out,
        "\nk = {} ({source}); silhouette optimum k = {} at {:.4}.\n",
        snapshot.k, snapshot.sweep.best_k, snapshot.sweep.best_score
    );
    let _ = writeln!(out, "| cluster | agents |");
    let _ = writeln!(out, "|---|---|");
    for (c, members) in snapshot.assignment.clusters().iter().enumerate() {
        let _ = writeln!(out, "| {c} | {} |", members.join(", "));
    }
    let _ = writeln!(out, "\n| k | mean silhouette |");
    let _ = writeln!(out, "|---|---|");
    for (k, s) in &snapshot.sweep.scores {
        let _ = writeln!(out, "| {k} | {s:.4} |");
    }
    out
}
