//! End-to-end analysis of one composition set: co-occurrence, divergence,
//! UPGMA and silhouette-based selection of `k`.

use serde::Serialize;

use crate::cooccur::{build_cooccurrence, normalize, CooccurrenceMatrix, ProbabilityVector};
use crate::diagnostics::{sweep_k, SilhouetteSweep};
use crate::divergence::{distance_matrix, DistanceKind, DistanceMatrix};
use crate::error::{Error, Result};
use crate::hac::{cut, upgma, ClusterAssignment, Dendrogram};
use crate::ingest::{build_roster, Roster, TeamComposition};

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub label: String,
    /// Fixed cluster count; must lie in `2..=m-1`. `None` uses the silhouette optimum.
    pub k: Option<usize>,
    pub distance: DistanceKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KSource {
    Silhouette,
    Override,
}

/// Everything one analysis run produces.
#[derive(Debug, Clone)]
pub struct AnalysisSnapshot {
    pub label: String,
    pub compositions: usize,
    pub roster: Roster,
    pub cooccurrence: Option<CooccurrenceMatrix>,
    /// One vector per roster agent, defined or not.
    pub vectors: Vec<ProbabilityVector>,
    /// Agents without any co-occurrence mass, left out of clustering.
    pub excluded: Vec<String>,
    pub distances: DistanceMatrix,
    pub dendrogram: Dendrogram,
    pub sweep: SilhouetteSweep,
    pub k: usize,
    pub k_source: KSource,
    pub assignment: ClusterAssignment,
}

/// Runs the whole pipeline over expanded compositions.
pub fn analyze(comps: &[TeamComposition], options: &AnalysisOptions) -> Result<AnalysisSnapshot> {
    let roster = build_roster(comps)?;
    let matrix = build_cooccurrence(comps, &roster)?;
    let vectors = normalize(&matrix);
    let mut snapshot = AnalysisSnapshot::from_vectors(roster, vectors, options)?;
    snapshot.compositions = comps.len();
    snapshot.cooccurrence = Some(matrix);
    Ok(snapshot)
}

impl AnalysisSnapshot {
    /// Clusters precomputed vectors whose positions follow `roster`.
    pub fn from_vectors(roster: Roster, vectors: Vec<ProbabilityVector>, options: &AnalysisOptions) -> Result<Self> {
        if let Some(v) = vectors.iter().find(|v| v.len() != roster.len()) {
            return Err(Error::DimensionMismatch {
                left: roster.len(),
                right: v.len(),
            });
        }
        let excluded = vectors
            .iter()
            .filter(|v| !v.is_defined())
            .map(|v| v.agent.clone())
            .collect();
        let distances = distance_matrix(&vectors, options.distance)?;
        let m = distances.len();
        if m < 3 {
            return Err(Error::NothingToCluster { needed: 3, found: m });
        }
        let dendrogram = upgma(&distances)?;
        let sweep = sweep_k(&distances, &dendrogram)?;
        let (k, k_source) = match options.k {
            Some(k) if !(2..m).contains(&k) => {
                return Err(Error::KOutOfRange { k, min: 2, max: m - 1 });
            }
            Some(k) => (k, KSource::Override),
            None => (sweep.best_k, KSource::Silhouette),
        };
        let assignment = cut(&dendrogram, k)?;
        Ok(AnalysisSnapshot {
            label: options.label.clone(),
            compositions: 0,
            roster,
            cooccurrence: None,
            vectors,
            excluded,
            distances,
            dendrogram,
            sweep,
            k,
            k_source,
            assignment,
        })
    }

    /// Replaces the flat partition, e.g. with a hand-built one.
    pub fn with_assignment(mut self, assignment: ClusterAssignment) -> Result<Self> {
        if assignment.agents() != self.distances.agents() {
            return Err(Error::InvalidMatrix(
                "assignment does not partition the clustered agents".into(),
            ));
        }
        self.k = assignment.k();
        self.k_source = KSource::Override;
        self.assignment = assignment;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Agents that took part in clustering, in leaf order.
    pub fn clustered_agents(&self) -> &[String] {
        self.distances.agents()
    }

    pub fn vector(&self, agent: &str) -> Option<&ProbabilityVector> {
        self.roster.position(agent).map(|i| &self.vectors[i])
    }

    pub fn cluster_of(&self, agent: &str) -> Option<usize> {
        self.assignment.label_of(agent)
    }

    pub fn cluster_vectors(&self, cluster: usize) -> Vec<&ProbabilityVector> {
        self.assignment
            .member_names(cluster)
            .iter()
            .filter_map(|a| self.vector(a))
            .collect()
    }
}
