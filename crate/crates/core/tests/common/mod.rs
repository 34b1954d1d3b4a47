//! Reference implementations shared by the integration tests.
//!
//! These deliberately avoid the library's own algorithms: average linkage is
//! recomputed from the raw matrix at every step, silhouettes use a plain
//! double loop, and ARI is computed from pair counts.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use teamroles::divergence::{DistanceKind, DistanceMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn labels(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("a{i:02}")).collect()
}

/// Euclidean distances between random points, so ties have probability zero.
pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> DistanceMatrix {
    let dims = rng.gen_range(1..=4);
    let points: Vec<Vec<f64>> = (0..m).map(|_| (0..dims).map(|_| rng.gen::<f64>()).collect()).collect();
    let rows = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let s: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                        s.sqrt()
                    }
                })
                .collect()
        })
        .collect();
    DistanceMatrix::new(labels(m), rows, DistanceKind::Jsd).unwrap()
}

pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize, sparse: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if sparse && rng.gen_bool(0.3) {
                0.0
            } else {
                -rng.gen::<f64>().ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[rng.gen_range(0..n)] = 1.0;
    }
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

pub type Partition = BTreeSet<BTreeSet<String>>;

pub fn partition_of(agents: &[String], labels: &[usize]) -> Partition {
    let k = labels.iter().max().map_or(0, |&l| l + 1);
    (0..k)
        .map(|c| {
            agents
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(a, _)| a.clone())
                .collect()
        })
        .collect()
}

pub struct OracleTree {
    pub heights: Vec<f64>,
    /// `partitions[t]` is the partition after `t` merges.
    pub partitions: Vec<Partition>,
}

/// Average linkage recomputed from scratch at every step. Ties go to the
/// pair with the smallest (min leaf, min leaf) indices.
pub fn brute_upgma(d: &DistanceMatrix) -> OracleTree {
    let m = d.len();
    let names = d.agents();
    let mut clusters: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let snapshot = |clusters: &Vec<Vec<usize>>| -> Partition {
        clusters
            .iter()
            .map(|c| c.iter().map(|&i| names[i].clone()).collect())
            .collect()
    };
    let mut heights = Vec::new();
    let mut partitions = vec![snapshot(&clusters)];
    while clusters.len() > 1 {
        clusters.sort_by_key(|c| *c.iter().min().unwrap());
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut total = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        total += d.get(i, j);
                    }
                }
                let avg = total / (clusters[a].len() * clusters[b].len()) as f64;
                if avg < best.2 {
                    best = (a, b, avg);
                }
            }
        }
        let (a, b, h) = best;
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        heights.push(h);
        partitions.push(snapshot(&clusters));
    }
    OracleTree { heights, partitions }
}

/// Plain double-loop silhouette; singletons score zero.
pub fn naive_silhouette(d: &DistanceMatrix, labels: &[usize]) -> Vec<f64> {
    let m = d.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut out = vec![0.0; m];
    for i in 0..m {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..m {
            if j != i {
                sums[labels[j]] += d.get(i, j);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && counts[c] > 0 {
                b = b.min(sums[c] / counts[c] as f64);
            }
        }
        let denom = a.max(b);
        out[i] = if denom == 0.0 { 0.0 } else { (b - a) / denom };
    }
    out
}

/// ARI from the four pair counts.
pub fn pair_count_ari(x: &[usize], y: &[usize]) -> f64 {
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            match (x[i] == x[j], y[i] == y[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if denom == 0.0 {
        1.0
    } else {
        2.0 * (n00 * n11 - n01 * n10) / denom
    }
}

/// Two tight pairs far apart: {p1, p2} and {p3, p4}.
pub fn two_tight_pairs() -> DistanceMatrix {
    let rows = vec![
        vec![0.0, 0.1, 0.9, 0.9],
        vec![0.1, 0.0, 0.9, 0.9],
        vec![0.9, 0.9, 0.0, 0.1],
        vec![0.9, 0.9, 0.1, 0.0],
    ];
    DistanceMatrix::new(
        vec!["p1".into(), "p2".into(), "p3".into(), "p4".into()],
        rows,
        DistanceKind::Jsd,
    )
    .unwrap()
}

pub fn sample_dataset() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample_haven.csv")
}
