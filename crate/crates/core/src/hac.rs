//! Average-linkage (UPGMA) agglomerative clustering and flat cuts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::divergence::DistanceMatrix;
use crate::error::{Error, Result};
use crate::fmt::{g17, G17};

/// One agglomeration step. Node ids follow the usual stepwise convention:
/// leaves are `0..m`, the cluster created by merge `t` is `m + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    leaves: Vec<String>,
    merges: Vec<Merge>,
}

/// Builds the UPGMA tree over `d`.
///
/// At each step the pair of active clusters with the smallest average
/// dissimilarity is merged. Ties go to the pair whose (smaller, larger)
/// minimum-leaf indices are lexicographically smallest. Distances to the new
/// cluster follow the size-weighted recurrence
/// `d(AB, C) = (|A| d(A, C) + |B| d(B, C)) / (|A| + |B|)`.
pub fn upgma(d: &DistanceMatrix) -> Result<Dendrogram> {
    let m = d.len();
    if m < 2 {
        return Err(Error::NothingToCluster { needed: 2, found: m });
    }
    // Slot i holds the active cluster whose smallest leaf is i.
    let mut work: Vec<Vec<f64>> = (0..m).map(|i| d.row(i).to_vec()).collect();
    let mut node: Vec<usize> = (0..m).collect();
    let mut size = vec![1usize; m];
    let mut active = vec![true; m];
    let mut merges = Vec::with_capacity(m - 1);

    for step in 0..m - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..m).filter(|&a| active[a]) {
            for b in (a + 1..m).filter(|&b| active[b]) {
                if best.is_none_or(|(_, _, h)| work[a][b] < h) {
                    best = Some((a, b, work[a][b]));
                }
            }
        }
        let (a, b, height) = best.expect("at least two active clusters");
        let merged = size[a] + size[b];
        for c in (0..m).filter(|&c| active[c] && c != a && c != b) {
            let updated = (size[a] as f64 * work[a][c] + size[b] as f64 * work[b][c]) / merged as f64;
            work[a][c] = updated;
            work[c][a] = updated;
        }
        merges.push(Merge {
            left: node[a],
            right: node[b],
            height,
            size: merged,
        });
        node[a] = m + step;
        size[a] = merged;
        active[b] = false;
    }

    Ok(Dendrogram {
        leaves: d.agents().to_vec(),
        merges,
    })
}

impl Dendrogram {
    /// Wraps an explicit merge list, checking node references and sizes.
    pub fn from_merges(leaves: Vec<String>, merges: Vec<Merge>) -> Result<Self> {
        let m = leaves.len();
        if merges.len() + 1 != m {
            return Err(Error::InvalidMatrix(format!("{} merges for {m} leaves", merges.len())));
        }
        let mut sizes: Vec<Option<usize>> = vec![Some(1); m];
        for (t, merge) in merges.iter().enumerate() {
            let mut take = |n: usize| sizes.get_mut(n).and_then(Option::take);
            let (l, r) = (take(merge.left), take(merge.right));
            match (l, r) {
                (Some(l), Some(r)) if l + r == merge.size => sizes.push(Some(merge.size)),
                _ => {
                    return Err(Error::InvalidMatrix(format!("merge {t} is inconsistent")));
                }
            }
        }
        Ok(Dendrogram { leaves, merges })
    }

    pub fn leaves(&self) -> &[String] {
        &self.leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    fn node_height(&self, node: usize) -> f64 {
        let m = self.leaves.len();
        if node < m {
            0.0
        } else {
            self.merges[node - m].height
        }
    }

    /// Newick string with merge heights turned into branch lengths.
    pub fn to_newick(&self) -> String {
        let m = self.leaves.len();
        let mut out = String::new();
        if m == 1 {
            out.push_str(&newick_label(&self.leaves[0]));
        } else {
            self.write_newick(m + self.merges.len() - 1, &mut out);
        }
        out.push(';');
        out
    }

    fn write_newick(&self, node: usize, out: &mut String) {
        let m = self.leaves.len();
        if node < m {
            out.push_str(&newick_label(&self.leaves[node]));
            return;
        }
        let merge = self.merges[node - m];
        out.push('(');
        for (i, child) in [merge.left, merge.right].into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            self.write_newick(child, out);
            let _ = write!(out, ":{}", g17(merge.height - self.node_height(child)));
        }
        out.push(')');
    }

    /// Graphviz rendering. Leaves are filled by cluster when an assignment is given.
    pub fn to_dot(&self, assignment: Option<&ClusterAssignment>) -> String {
        const PALETTE: [&str; 10] = [
            "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
            "#17becf",
        ];
        let m = self.leaves.len();
        let mut out = String::from("digraph dendrogram {\n  rankdir=TB;\n  node [shape=box];\n");
        for (i, leaf) in self.leaves.iter().enumerate() {
            let fill = assignment
                .and_then(|a| a.label_of(leaf))
                .map(|c| format!(", style=filled, fillcolor=\"{}\"", PALETTE[c % PALETTE.len()]))
                .unwrap_or_default();
            let _ = writeln!(out, "  n{i} [label=\"{}\"{fill}];", dot_escape(leaf));
        }
        for (t, merge) in self.merges.iter().enumerate() {
            let id = m + t;
            let _ = writeln!(out, "  n{id} [label=\"{}\", shape=ellipse];", g17(merge.height));
            let _ = writeln!(out, "  n{id} -> n{};", merge.left);
            let _ = writeln!(out, "  n{id} -> n{};", merge.right);
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> DendrogramJson {
        DendrogramJson {
            leaves: self.leaves.clone(),
            merges: self
                .merges
                .iter()
                .map(|m| MergeJson {
                    left: m.left,
                    right: m.right,
                    height: G17(m.height),
                    size: m.size,
                })
                .collect(),
        }
    }
}

fn newick_label(name: &str) -> String {
    if name.chars().any(|c| c.is_whitespace() || "()[]':;,".contains(c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

fn dot_escape(name: &str) -> String {
    name.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Debug, Clone, Serialize)]
pub struct MergeJson {
    pub left: usize,
    pub right: usize,
    pub height: G17,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DendrogramJson {
    pub leaves: Vec<String>,
    pub merges: Vec<MergeJson>,
}

/// A flat partition into `k` clusters.
///
/// Cluster ids are `0..k`, numbered in order of each cluster's first member
/// in leaf order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    k: usize,
    agents: Vec<String>,
    labels: Vec<usize>,
}

impl ClusterAssignment {
    /// Relabels arbitrary cluster labels into first-appearance order.
    pub fn from_labels(agents: Vec<String>, raw: &[usize]) -> Result<Self> {
        if agents.len() != raw.len() {
            return Err(Error::DimensionMismatch {
                left: agents.len(),
                right: raw.len(),
            });
        }
        let mut ids = BTreeMap::new();
        let labels = raw
            .iter()
            .map(|r| {
                let next = ids.len();
                *ids.entry(*r).or_insert(next)
            })
            .collect();
        Ok(ClusterAssignment {
            k: ids.len(),
            agents,
            labels,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_of(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent).map(|i| self.labels[i])
    }

    /// Leaf indices of cluster `c`.
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == c).collect()
    }

    pub fn member_names(&self, c: usize) -> Vec<String> {
        self.members(c).into_iter().map(|i| self.agents[i].clone()).collect()
    }

    pub fn clusters(&self) -> Vec<Vec<String>> {
        (0..self.k).map(|c| self.member_names(c)).collect()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["agent", "cluster_id"])?;
        for (agent, label) in self.agents.iter().zip(&self.labels) {
            writer.write_record([agent.as_str(), &label.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Undoes the last `k - 1` merges, leaving exactly `k` clusters.
pub fn cut(dendro: &Dendrogram, k: usize) -> Result<ClusterAssignment> {
    let m = dendro.leaves.len();
    if k < 1 || k > m {
        return Err(Error::KOutOfRange { k, min: 1, max: m });
    }
    let mut parent: Vec<usize> = (0..2 * m - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (t, merge) in dendro.merges.iter().take(m - k).enumerate() {
        let id = m + t;
        let l = find(&mut parent, merge.left);
        let r = find(&mut parent, merge.right);
        parent[l] = id;
        parent[r] = id;
    }
    let roots: Vec<usize> = (0..m).map(|i| find(&mut parent, i)).collect();
    ClusterAssignment::from_labels(dendro.leaves.clone(), &roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DistanceKind;

    fn matrix(rows: Vec<Vec<f64>>) -> DistanceMatrix {
        let labels = (1..=rows.len()).map(|i| format!("p{i}")).collect();
        DistanceMatrix::new(labels, rows, DistanceKind::Jsd).unwrap()
    }

    fn two_pairs() -> DistanceMatrix {
        matrix(vec![
            vec![0.0, 0.1, 0.9, 0.9],
            vec![0.1, 0.0, 0.9, 0.9],
            vec![0.9, 0.9, 0.0, 0.2],
            vec![0.9, 0.9, 0.2, 0.0],
        ])
    }

    #[test]
    fn two_points_merge_once() {
        let d = upgma(&matrix(vec![vec![0.0, 0.4], vec![0.4, 0.0]])).unwrap();
        assert_eq!(
            d.merges(),
            [Merge {
                left: 0,
                right: 1,
                height: 0.4,
                size: 2
            }]
        );
    }

    #[test]
    fn two_tight_pairs_hand_executed() {
        let d = upgma(&two_pairs()).unwrap();
        assert_eq!(
            d.merges(),
            [
                Merge {
                    left: 0,
                    right: 1,
                    height: 0.1,
                    size: 2
                },
                Merge {
                    left: 2,
                    right: 3,
                    height: 0.2,
                    size: 2
                },
                Merge {
                    left: 4,
                    right: 5,
                    height: 0.9,
                    size: 4
                },
            ]
        );
        let two = cut(&d, 2).unwrap();
        assert_eq!(two.labels(), [0, 0, 1, 1]);
        assert_eq!(two.clusters(), [vec!["p1", "p2"], vec!["p3", "p4"]]);
    }

    #[test]
    fn cut_extremes() {
        let d = upgma(&two_pairs()).unwrap();
        assert_eq!(cut(&d, 4).unwrap().labels(), [0, 1, 2, 3]);
        assert_eq!(cut(&d, 1).unwrap().labels(), [0, 0, 0, 0]);
        assert!(matches!(cut(&d, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(cut(&d, 5), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn recurrence_is_size_weighted() {
        // {p1,p2} merge first; d({p1,p2}, p3) = (0.3 + 0.6) / 2 = 0.45 < d(p3,p4)=0.5
        let d = upgma(&matrix(vec![
            vec![0.0, 0.1, 0.3, 0.8],
            vec![0.1, 0.0, 0.6, 0.8],
            vec![0.3, 0.6, 0.0, 0.5],
            vec![0.8, 0.8, 0.5, 0.0],
        ]))
        .unwrap();
        let second = d.merges()[1];
        assert_eq!((second.left, second.right, second.size), (4, 2, 3));
        assert!((second.height - 0.45).abs() < 1e-15);
        // (2 * 0.8 + 0.5) / 3
        assert!((d.merges()[2].height - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_smallest_leaf_pair() {
        let d = upgma(&matrix(vec![
            vec![0.0, 0.5, 0.5, 0.5],
            vec![0.5, 0.0, 0.5, 0.5],
            vec![0.5, 0.5, 0.0, 0.5],
            vec![0.5, 0.5, 0.5, 0.0],
        ]))
        .unwrap();
        let pairs: Vec<(usize, usize)> = d.merges().iter().map(|m| (m.left, m.right)).collect();
        assert_eq!(pairs, [(0, 1), (4, 2), (5, 3)]);
    }

    #[test]
    fn newick_uses_branch_lengths() {
        let d = upgma(&two_pairs()).unwrap();
        assert_eq!(
            d.to_newick(),
            "((p1:0.10000000000000001,p2:0.10000000000000001):0.80000000000000004,\
             (p3:0.20000000000000001,p4:0.20000000000000001):0.69999999999999996);"
        );
        assert_eq!(newick_label("KAY/O"), "KAY/O");
        assert_eq!(newick_label("it's"), "'it''s'");
    }

    #[test]
    fn dot_lists_every_node() {
        let d = upgma(&two_pairs()).unwrap();
        let a = cut(&d, 2).unwrap();
        let dot = d.to_dot(Some(&a));
        assert!(dot.starts_with("digraph dendrogram {"));
        assert_eq!(dot.matches("->").count(), 6);
        assert_eq!(dot.matches("fillcolor").count(), 4);
    }

    #[test]
    fn from_merges_validates() {
        let leaves: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let ok = vec![
            Merge {
                left: 0,
                right: 1,
                height: 0.1,
                size: 2,
            },
            Merge {
                left: 3,
                right: 2,
                height: 0.2,
                size: 3,
            },
        ];
        assert!(Dendrogram::from_merges(leaves.clone(), ok).is_ok());
        let reused = vec![
            Merge {
                left: 0,
                right: 1,
                height: 0.1,
                size: 2,
            },
            Merge {
                left: 0,
                right: 2,
                height: 0.2,
                size: 2,
            },
        ];
        assert!(Dendrogram::from_merges(leaves, reused).is_err());
    }
}
