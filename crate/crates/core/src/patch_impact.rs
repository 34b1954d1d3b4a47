//! Before/after comparison of two analyses.
//!
//! Clusters of the two snapshots are put in correspondence by greedy
//! Jaccard matching; per-agent centroid-distance changes and per-cluster
//! changes of the mean internal divergence are then reported as absolute
//! differences.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::cooccur::ProbabilityVector;
use crate::divergence::{jsd_slices, DistanceKind, LOG_BASE};
use crate::error::{Error, Result};
use crate::fmt::G17;
use crate::ingest::agent_key;
use crate::pipeline::AnalysisSnapshot;

pub const REPORT_SCHEMA_VERSION: &str = "1";

/// Componentwise mean of a cluster's probability vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCentroid {
    pub cluster_id: usize,
    pub centroid: Vec<f64>,
}

pub fn centroid(members: &[&ProbabilityVector]) -> Result<Vec<f64>> {
    let first = members.first().ok_or(Error::EmptyCluster)?;
    let n = first.len();
    let mut sum = vec![0.0; n];
    for v in members {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                left: n,
                right: v.len(),
            });
        }
        for (s, p) in sum.iter_mut().zip(&v.probs) {
            *s += p;
        }
    }
    let count = members.len() as f64;
    Ok(sum.into_iter().map(|s| s / count).collect())
}

pub fn cluster_centroid(snapshot: &AnalysisSnapshot, cluster_id: usize) -> Result<ClusterCentroid> {
    Ok(ClusterCentroid {
        cluster_id,
        centroid: centroid(&snapshot.cluster_vectors(cluster_id))?,
    })
}

/// Mean pairwise JSD inside a cluster; `None` for singletons. Always plain
/// JSD, whatever distance the clustering itself used.
pub fn mean_inter(snapshot: &AnalysisSnapshot, cluster: usize) -> Option<f64> {
    let members = snapshot.assignment.members(cluster);
    let size = members.len();
    if size < 2 {
        return None;
    }
    let agents = snapshot.clustered_agents();
    let plain = snapshot.distances.kind() == DistanceKind::Jsd;
    let mut sum = 0.0;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            sum += if plain {
                snapshot.distances.get(i, j)
            } else {
                let (p, q) = (snapshot.vector(&agents[i]), snapshot.vector(&agents[j]));
                let (p, q) = (
                    p.expect("clustered agents have vectors"),
                    q.expect("clustered agents have vectors"),
                );
                jsd_slices(&p.probs, &q.probs).expect("vectors of one snapshot share a roster")
            };
        }
    }
    Some(2.0 * sum / (size * (size - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pre: usize,
    pub post: usize,
    pub jaccard: f64,
    pub centroid_jsd: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterMatching {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_pre: Vec<usize>,
    pub unmatched_post: Vec<usize>,
}

impl ClusterMatching {
    pub fn post_for(&self, pre: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.pre == pre).map(|p| p.post)
    }

    pub fn pre_for(&self, post: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.post == post).map(|p| p.pre)
    }
}

fn key_set(names: &[String]) -> HashSet<String> {
    names.iter().map(|n| agent_key(n)).collect()
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a = key_set(a);
    let b = key_set(b);
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Projects two distributions over different rosters onto the union roster.
fn align(pre: &[f64], pre_names: &[String], post: &[f64], post_names: &[String]) -> (Vec<f64>, Vec<f64>) {
    let mut union: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for (name, &p) in pre_names.iter().zip(pre) {
        union.entry(agent_key(name)).or_default().0 = p;
    }
    for (name, &q) in post_names.iter().zip(post) {
        union.entry(agent_key(name)).or_default().1 = q;
    }
    union.into_values().unzip()
}

/// Greedy maximum-weight matching of clusters on Jaccard overlap.
///
/// Candidate pairs are taken in order of decreasing overlap, then increasing
/// divergence between the two centroids, then pre id, then post id. Pairs
/// with zero overlap are never matched.
pub fn match_clusters(pre: &AnalysisSnapshot, post: &AnalysisSnapshot) -> Result<ClusterMatching> {
    let shared = key_set(pre.clustered_agents())
        .intersection(&key_set(post.clustered_agents()))
        .count();
    if shared == 0 {
        return Err(Error::DisjointRosters);
    }
    let pre_clusters = pre.assignment.clusters();
    let post_clusters = post.assignment.clusters();
    let pre_centroids = (0..pre.k)
        .map(|c| cluster_centroid(pre, c).map(|c| c.centroid))
        .collect::<Result<Vec<_>>>()?;
    let post_centroids = (0..post.k)
        .map(|c| cluster_centroid(post, c).map(|c| c.centroid))
        .collect::<Result<Vec<_>>>()?;

    let mut candidates = Vec::new();
    for (i, pre_members) in pre_clusters.iter().enumerate() {
        for (j, post_members) in post_clusters.iter().enumerate() {
            let overlap = jaccard(pre_members, post_members);
            if overlap > 0.0 {
                let (p, q) = align(
                    &pre_centroids[i],
                    pre.roster.names(),
                    &post_centroids[j],
                    post.roster.names(),
                );
                candidates.push(MatchedPair {
                    pre: i,
                    post: j,
                    jaccard: overlap,
                    centroid_jsd: jsd_slices(&p, &q)?,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.jaccard
            .total_cmp(&a.jaccard)
            .then(a.centroid_jsd.total_cmp(&b.centroid_jsd))
            .then(a.pre.cmp(&b.pre))
            .then(a.post.cmp(&b.post))
    });

    let mut used_pre = vec![false; pre.k];
    let mut used_post = vec![false; post.k];
    let mut pairs = Vec::new();
    for c in candidates {
        if !used_pre[c.pre] && !used_post[c.post] {
            used_pre[c.pre] = true;
            used_post[c.post] = true;
            pairs.push(c);
        }
    }
    pairs.sort_by_key(|p| p.pre);
    Ok(ClusterMatching {
        pairs,
        unmatched_pre: (0..pre.k).filter(|&c| !used_pre[c]).collect(),
        unmatched_post: (0..post.k).filter(|&c| !used_post[c]).collect(),
    })
}

/// Divergence of an agent's vector from its own cluster's centroid.
pub fn centroid_distance(snapshot: &AnalysisSnapshot, agent: &str) -> Option<Result<f64>> {
    let cluster = snapshot.cluster_of(agent)?;
    let vector = snapshot.vector(agent)?;
    Some(cluster_centroid(snapshot, cluster).and_then(|c| jsd_slices(&vector.probs, &c.centroid)))
}

/// `|JSD(v_post, μ_post) − JSD(v_pre, μ_pre)|` for one agent, each centroid
/// taken over the agent's own cluster in that snapshot. `None` when the agent
/// was not clustered in one of the snapshots.
pub fn delta_centroid(agent: &str, pre: &AnalysisSnapshot, post: &AnalysisSnapshot) -> Result<Option<f64>> {
    match (centroid_distance(pre, agent), centroid_distance(post, agent)) {
        (Some(before), Some(after)) => Ok(Some((after? - before?).abs())),
        _ => Ok(None),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterDelta {
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
    pub delta: Option<f64>,
    pub reason: Option<String>,
}

/// Change in mean internal divergence between two corresponding clusters.
pub fn delta_inter(
    pre_cluster: usize,
    post_cluster: usize,
    pre: &AnalysisSnapshot,
    post: &AnalysisSnapshot,
) -> InterDelta {
    let pre_mean = mean_inter(pre, pre_cluster);
    let post_mean = mean_inter(post, post_cluster);
    let (delta, reason) = match (pre_mean, post_mean) {
        (Some(a), Some(b)) => (Some((b - a).abs()), None),
        _ => (None, Some("singleton".to_string())),
    };
    InterDelta {
        pre_mean,
        post_mean,
        delta,
        reason,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct MembershipShifts {
    /// Agents whose post cluster is not the match of their pre cluster.
    pub shifted: Vec<String>,
    /// Clustered only after the patch.
    pub added: Vec<String>,
    /// Clustered only before the patch.
    pub removed: Vec<String>,
}

pub fn membership_shifts(
    pre: &AnalysisSnapshot,
    post: &AnalysisSnapshot,
    matching: &ClusterMatching,
) -> MembershipShifts {
    let post_keys = key_set(post.clustered_agents());
    let pre_keys = key_set(pre.clustered_agents());
    let mut out = MembershipShifts::default();
    for agent in pre.clustered_agents() {
        if !post_keys.contains(&agent_key(agent)) {
            out.removed.push(agent.clone());
            continue;
        }
        let before = pre.cluster_of(agent).expect("clustered");
        let after = post_cluster_of(post, agent);
        if matching.post_for(before) != after {
            out.shifted.push(agent.clone());
        }
    }
    out.added = post
        .clustered_agents()
        .iter()
        .filter(|a| !pre_keys.contains(&agent_key(a)))
        .cloned()
        .collect();
    out
}

fn post_cluster_of(post: &AnalysisSnapshot, agent: &str) -> Option<usize> {
    let key = agent_key(agent);
    post.clustered_agents()
        .iter()
        .position(|a| agent_key(a) == key)
        .map(|i| post.assignment.labels()[i])
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentImpact {
    pub agent: String,
    pub pre_cluster: usize,
    pub post_cluster: usize,
    pub matched: bool,
    pub pre_distance: f64,
    pub post_distance: f64,
    pub delta_centroid: f64,
    pub pre_support: u64,
    pub post_support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterImpact {
    pub pre_cluster: usize,
    pub post_cluster: usize,
    pub jaccard: f64,
    pub inter: InterDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchImpactReport {
    pub pre_label: String,
    pub post_label: String,
    pub k_pre: usize,
    pub k_post: usize,
    pub pre_clusters: Vec<Vec<String>>,
    pub post_clusters: Vec<Vec<String>>,
    pub matching: ClusterMatching,
    pub per_agent: Vec<AgentImpact>,
    pub per_cluster: Vec<ClusterImpact>,
    pub shifts: MembershipShifts,
}

/// Full comparison of a pre-patch and a post-patch snapshot.
pub fn compare(pre: &AnalysisSnapshot, post: &AnalysisSnapshot) -> Result<PatchImpactReport> {
    let matching = match_clusters(pre, post)?;
    let shifts = membership_shifts(pre, post, &matching);

    let mut per_agent = Vec::new();
    for agent in pre.clustered_agents() {
        let (Some(pre_d), Some(post_d)) = (centroid_distance(pre, agent), centroid_distance(post, agent)) else {
            continue;
        };
        let (pre_d, post_d) = (pre_d?, post_d?);
        let pre_cluster = pre.cluster_of(agent).expect("clustered");
        let post_cluster = post_cluster_of(post, agent).expect("clustered");
        per_agent.push(AgentImpact {
            agent: agent.clone(),
            pre_cluster,
            post_cluster,
            matched: matching.post_for(pre_cluster) == Some(post_cluster),
            pre_distance: pre_d,
            post_distance: post_d,
            delta_centroid: (post_d - pre_d).abs(),
            pre_support: pre.vector(agent).map_or(0, |v| v.support_count),
            post_support: post.vector(agent).map_or(0, |v| v.support_count),
        });
    }

    let per_cluster = matching
        .pairs
        .iter()
        .map(|p| ClusterImpact {
            pre_cluster: p.pre,
            post_cluster: p.post,
            jaccard: p.jaccard,
            inter: delta_inter(p.pre, p.post, pre, post),
        })
        .collect();

    Ok(PatchImpactReport {
        pre_label: pre.label.clone(),
        post_label: post.label.clone(),
        k_pre: pre.k,
        k_post: post.k,
        pre_clusters: pre.assignment.clusters(),
        post_clusters: post.assignment.clusters(),
        matching,
        per_agent,
        per_cluster,
        shifts,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentImpactJson {
    pub agent: String,
    pub pre_cluster: usize,
    pub post_cluster: usize,
    pub matched: bool,
    pub pre_centroid_jsd: G17,
    pub post_centroid_jsd: G17,
    pub delta_centroid: G17,
    pub pre_support_count: u64,
    pub post_support_count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterImpactJson {
    pub pre_cluster: usize,
    pub post_cluster: usize,
    pub jaccard: G17,
    pub pre_mean_inter: Option<G17>,
    pub post_mean_inter: Option<G17>,
    pub delta_inter: Option<G17>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchJson {
    pub pre_cluster: usize,
    pub post_cluster: usize,
    pub jaccard: G17,
    pub centroid_jsd: G17,
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchImpactJson {
    pub schema_version: &'static str,
    pub pre_label: String,
    pub post_label: String,
    pub log_base: u32,
    pub k_pre: usize,
    pub k_post: usize,
    pub k_mismatch: bool,
    pub pre_clusters: Vec<Vec<String>>,
    pub post_clusters: Vec<Vec<String>>,
    pub cluster_matching: Vec<MatchJson>,
    pub unmatched_pre_clusters: Vec<usize>,
    pub unmatched_post_clusters: Vec<usize>,
    pub per_agent: Vec<AgentImpactJson>,
    pub per_cluster: Vec<ClusterImpactJson>,
    pub membership_shifts: Vec<String>,
    pub added_agents: Vec<String>,
    pub removed_agents: Vec<String>,
}

impl PatchImpactReport {
    pub fn is_null(&self) -> bool {
        self.per_agent.iter().all(|a| a.delta_centroid == 0.0)
            && self.per_cluster.iter().all(|c| c.inter.delta.unwrap_or(0.0) == 0.0)
            && self.shifts.shifted.is_empty()
    }

    pub fn to_json(&self) -> PatchImpactJson {
        PatchImpactJson {
            schema_version: REPORT_SCHEMA_VERSION,
            pre_label: self.pre_label.clone(),
            post_label: self.post_label.clone(),
            log_base: LOG_BASE,
            k_pre: self.k_pre,
            k_post: self.k_post,
            k_mismatch: self.k_pre != self.k_post,
            pre_clusters: self.pre_clusters.clone(),
            post_clusters: self.post_clusters.clone(),
            cluster_matching: self
                .matching
                .pairs
                .iter()
                .map(|p| MatchJson {
                    pre_cluster: p.pre,
                    post_cluster: p.post,
                    jaccard: G17(p.jaccard),
                    centroid_jsd: G17(p.centroid_jsd),
                })
                .collect(),
            unmatched_pre_clusters: self.matching.unmatched_pre.clone(),
            unmatched_post_clusters: self.matching.unmatched_post.clone(),
            per_agent: self
                .per_agent
                .iter()
                .map(|a| AgentImpactJson {
                    agent: a.agent.clone(),
                    pre_cluster: a.pre_cluster,
                    post_cluster: a.post_cluster,
                    matched: a.matched,
                    pre_centroid_jsd: G17(a.pre_distance),
                    post_centroid_jsd: G17(a.post_distance),
                    delta_centroid: G17(a.delta_centroid),
                    pre_support_count: a.pre_support,
                    post_support_count: a.post_support,
                })
                .collect(),
            per_cluster: self
                .per_cluster
                .iter()
                .map(|c| ClusterImpactJson {
                    pre_cluster: c.pre_cluster,
                    post_cluster: c.post_cluster,
                    jaccard: G17(c.jaccard),
                    pre_mean_inter: c.inter.pre_mean.map(G17),
                    post_mean_inter: c.inter.post_mean.map(G17),
                    delta_inter: c.inter.delta.map(G17),
                    reason: c.inter.reason.clone(),
                })
                .collect(),
            membership_shifts: self.shifts.shifted.clone(),
            added_agents: self.shifts.added.clone(),
            removed_agents: self.shifts.removed.clone(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Patch impact: {} -> {}\n", self.pre_label, self.post_label);
        let _ = writeln!(out, "Clusters: {} before, {} after.", self.k_pre, self.k_post);
        if self.k_pre != self.k_post {
            let _ = writeln!(
                out,
                "Note: cluster counts differ; clusters are matched by member overlap."
            );
        }
        let _ = writeln!(out, "\n## Cluster matching\n");
        let _ = writeln!(
            out,
            "| pre | post | jaccard | mean JSD before | mean JSD after | delta |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        let fmt = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"));
        for c in &self.per_cluster {
            let _ = writeln!(
                out,
                "| {} {{{}}} | {} {{{}}} | {:.3} | {} | {} | {} |",
                c.pre_cluster,
                self.pre_clusters[c.pre_cluster].join(", "),
                c.post_cluster,
                self.post_clusters[c.post_cluster].join(", "),
                c.jaccard,
                fmt(c.inter.pre_mean),
                fmt(c.inter.post_mean),
                c.inter
                    .delta
                    .map_or_else(|| c.inter.reason.clone().unwrap_or_default(), |d| format!("{d:.4}")),
            );
        }
        for c in &self.matching.unmatched_pre {
            let _ = writeln!(out, "| {c} (unmatched) | | | | | |");
        }
        for c in &self.matching.unmatched_post {
            let _ = writeln!(out, "| | {c} (unmatched) | | | | |");
        }
        let _ = writeln!(out, "\n## Agents\n");
        let _ = writeln!(
            out,
            "| agent | pre | post | matched | JSD to centroid before | after | delta |"
        );
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        let mut agents: Vec<&AgentImpact> = self.per_agent.iter().collect();
        agents.sort_by(|a, b| {
            b.delta_centroid
                .total_cmp(&a.delta_centroid)
                .then(a.agent.cmp(&b.agent))
        });
        for a in agents {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} | {:.4} | {:.4} |",
                a.agent, a.pre_cluster, a.post_cluster, a.matched, a.pre_distance, a.post_distance, a.delta_centroid
            );
        }
        let list = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join(", ") };
        let _ = writeln!(out, "\nMembership shifts: {}", list(&self.shifts.shifted));
        let _ = writeln!(out, "Added agents: {}", list(&self.shifts.added));
        let _ = writeln!(out, "Removed agents: {}", list(&self.shifts.removed));
        out
    }
}
