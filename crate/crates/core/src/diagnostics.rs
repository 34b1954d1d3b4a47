//! Silhouette scoring over a precomputed distance matrix, cluster-count
//! selection, and partition agreement.

use std::collections::HashMap;
use std::io::Write;

use serde::Serialize;

use crate::divergence::DistanceMatrix;
use crate::error::{Error, Result};
use crate::fmt::{g17, G17};
use crate::hac::{cut, ClusterAssignment, Dendrogram};

fn aligned_labels(d: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<Vec<usize>> {
    if assignment.agents() == d.agents() {
        return Ok(assignment.labels().to_vec());
    }
    if assignment.agents().len() != d.len() {
        return Err(Error::DimensionMismatch {
            left: d.len(),
            right: assignment.agents().len(),
        });
    }
    d.agents()
        .iter()
        .map(|a| assignment.label_of(a).ok_or_else(|| Error::UnknownAgent(a.clone())))
        .collect()
}

/// Per-agent silhouette values `(b - a) / max(a, b)`.
///
/// Members of singleton clusters score 0, as do points with `a = b = 0`.
pub fn silhouette_samples(d: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<Vec<f64>> {
    let k = assignment.k();
    if k < 2 {
        return Err(Error::KOutOfRange {
            k,
            min: 2,
            max: d.len(),
        });
    }
    let labels = aligned_labels(d, assignment)?;
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut sums = vec![0.0; k];
    let scores = (0..d.len())
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for (j, &dij) in d.row(i).iter().enumerate() {
                sums[labels[j]] += dij;
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let scale = a.max(b);
            if scale > 0.0 {
                (b - a) / scale
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores)
}

/// Mean silhouette of a flat partition of the agents in `d`.
pub fn silhouette(d: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    let samples = silhouette_samples(d, assignment)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Mean silhouette at every cut `k = 2..=m-1` of one dendrogram.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteSweep {
    pub scores: Vec<(usize, f64)>,
    pub best_k: usize,
    pub best_score: f64,
}

impl SilhouetteSweep {
    pub fn score(&self, k: usize) -> Option<f64> {
        self.scores.iter().find(|(kk, _)| *kk == k).map(|&(_, s)| s)
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(["k", "mean_silhouette"])?;
        for (k, s) in &self.scores {
            writer.write_record([k.to_string(), g17(*s)])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> SweepJson {
        SweepJson {
            scores: self
                .scores
                .iter()
                .map(|&(k, s)| SweepEntry {
                    k,
                    mean_silhouette: G17(s),
                })
                .collect(),
            best_k: self.best_k,
            best_score: G17(self.best_score),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub k: usize,
    pub mean_silhouette: G17,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepJson {
    pub scores: Vec<SweepEntry>,
    pub best_k: usize,
    pub best_score: G17,
}

/// Scores every cut of `dendro` and picks the best; ties go to the smaller `k`.
pub fn sweep_k(d: &DistanceMatrix, dendro: &Dendrogram) -> Result<SilhouetteSweep> {
    let m = d.len();
    if m < 3 {
        return Err(Error::NothingToCluster { needed: 3, found: m });
    }
    let mut scores = Vec::with_capacity(m - 2);
    for k in 2..m {
        scores.push((k, silhouette(d, &cut(dendro, k)?)?));
    }
    let (best_k, best_score) = scores
        .iter()
        .copied()
        .fold(None, |best: Option<(usize, f64)>, (k, s)| match best {
            Some((_, bs)) if s <= bs => best,
            _ => Some((k, s)),
        })
        .expect("sweep range is nonempty");
    Ok(SilhouetteSweep {
        scores,
        best_k,
        best_score,
    })
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings of the same items.
///
/// Returns 1.0 when both partitions are trivial in the same way (the index is
/// otherwise undefined there).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut rows: HashMap<usize, u64> = HashMap::new();
    let mut cols: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sum_rows: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sum_cols: f64 = cols.values().map(|&n| choose2(n)).sum();
    let total = choose2(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::DistanceKind;
    use crate::hac::upgma;

    fn matrix(rows: Vec<Vec<f64>>) -> DistanceMatrix {
        let labels = (1..=rows.len()).map(|i| format!("p{i}")).collect();
        DistanceMatrix::new(labels, rows, DistanceKind::Jsd).unwrap()
    }

    fn two_tight_pairs() -> DistanceMatrix {
        matrix(vec![
            vec![0.0, 0.1, 0.9, 0.9],
            vec![0.1, 0.0, 0.9, 0.9],
            vec![0.9, 0.9, 0.0, 0.1],
            vec![0.9, 0.9, 0.1, 0.0],
        ])
    }

    #[test]
    fn two_tight_pairs_score() {
        let d = two_tight_pairs();
        let a = ClusterAssignment::from_labels(d.agents().to_vec(), &[0, 0, 1, 1]).unwrap();
        // every point: a = 0.1, b = 0.9
        let s = silhouette(&d, &a).unwrap();
        assert!((s - 0.8 / 0.9).abs() < 1e-12);
        assert!((s - 0.8889).abs() < 1e-4);
    }

    #[test]
    fn two_tight_pairs_sweep_picks_two() {
        let d = two_tight_pairs();
        let sweep = sweep_k(&d, &upgma(&d).unwrap()).unwrap();
        // k = 3 splits one pair: the two singletons score 0, the intact pair
        // keeps a = 0.1 and b = 0.9.
        let k3 = 2.0 * (0.8 / 0.9) / 4.0;
        assert!((sweep.score(3).unwrap() - k3).abs() < 1e-12);
        assert_eq!(sweep.best_k, 2);
        assert_eq!(sweep.scores.len(), 2);
    }

    #[test]
    fn all_singletons_score_zero() {
        let d = two_tight_pairs();
        let a = ClusterAssignment::from_labels(d.agents().to_vec(), &[0, 1, 2, 3]).unwrap();
        assert_eq!(silhouette(&d, &a).unwrap(), 0.0);
    }

    #[test]
    fn single_cluster_is_rejected() {
        let d = two_tight_pairs();
        let a = ClusterAssignment::from_labels(d.agents().to_vec(), &[0, 0, 0, 0]).unwrap();
        assert!(matches!(silhouette(&d, &a), Err(Error::KOutOfRange { k: 1, .. })));
    }

    #[test]
    fn equilateral_triangle_has_one_candidate() {
        let d = matrix(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]]);
        let sweep = sweep_k(&d, &upgma(&d).unwrap()).unwrap();
        assert_eq!(sweep.scores.len(), 1);
        assert_eq!(sweep.best_k, 2);
    }

    #[test]
    fn sweep_needs_three_points() {
        let d = matrix(vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
        assert!(matches!(
            sweep_k(&d, &upgma(&d).unwrap()),
            Err(Error::NothingToCluster { needed: 3, .. })
        ));
    }

    #[test]
    fn ari_reference_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]).unwrap(), 1.0);
        // sklearn.metrics.adjusted_rand_score([0,0,1,1],[0,1,0,1]) == -0.5
        assert!((adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-12);
        // adjusted_rand_score([0,0,0,1,1,1],[0,0,1,1,2,2]) == 0.24242424242424243
        let ari = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 2, 2]).unwrap();
        assert!((ari - 0.242_424_242_424_242_43).abs() < 1e-12);
    }
}
