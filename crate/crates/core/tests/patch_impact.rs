mod common;

use proptest::prelude::*;
use teamroles::cooccur::ProbabilityVector;
use teamroles::hac::ClusterAssignment;
use teamroles::ingest::{expand_and_filter, parse_records, ParseOptions, Roster};
use teamroles::patch_impact::{compare, jaccard, match_clusters};
use teamroles::pipeline::{analyze, AnalysisOptions, AnalysisSnapshot};
use teamroles::synth::{generate, symmetric_model};

fn sample_snapshot(map: Option<&str>) -> AnalysisSnapshot {
    let file = std::fs::File::open(common::sample_dataset()).unwrap();
    let records = parse_records(file, &ParseOptions::default()).unwrap().records;
    analyze(&expand_and_filter(&records, map), &AnalysisOptions::default()).unwrap()
}

fn fixtures() -> Vec<AnalysisSnapshot> {
    let mut out = vec![sample_snapshot(Some("Haven")), sample_snapshot(None)];
    for (noise, seed) in [(0.0, 1), (0.3, 2), (0.8, 3)] {
        let comps = generate(&symmetric_model(3, 5, 1.0 / 3.0, noise, 2_000, seed)).unwrap();
        out.push(analyze(&comps, &AnalysisOptions::default()).unwrap());
    }
    out
}

/// Snapshot over random vectors with a chosen partition.
fn random_snapshot(seed: u64, m: usize, labels: &[usize]) -> AnalysisSnapshot {
    let mut rng = common::rng(seed);
    let names = common::labels(m);
    let vectors = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut p = common::random_simplex(&mut rng, m, false);
            p[i] = 0.0;
            let total: f64 = p.iter().sum();
            ProbabilityVector::new(n.clone(), p.iter().map(|x| x / total).collect())
        })
        .collect();
    AnalysisSnapshot::from_vectors(Roster::new(names.clone()), vectors, &AnalysisOptions::default())
        .unwrap()
        .with_assignment(ClusterAssignment::from_labels(names, labels).unwrap())
        .unwrap()
}

fn best_total(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
    if row == w.len() {
        return 0.0;
    }
    let mut best = best_total(w, row + 1, used);
    for c in 0..used.len() {
        if !used[c] && w[row][c] > 0.0 {
            used[c] = true;
            best = best.max(w[row][c] + best_total(w, row + 1, used));
            used[c] = false;
        }
    }
    best
}

#[test]
fn self_comparison_is_null_on_every_fixture() {
    for snap in fixtures() {
        let report = compare(&snap, &snap).unwrap();
        assert!(report.is_null());
        assert!(report.per_agent.iter().all(|a| a.delta_centroid == 0.0 && a.matched));
        assert!(report
            .per_cluster
            .iter()
            .all(|c| c.inter.delta.is_none_or(|d| d == 0.0)));
        assert!(report.shifts.shifted.is_empty() && report.shifts.added.is_empty() && report.shifts.removed.is_empty());
        assert!(report
            .matching
            .pairs
            .iter()
            .all(|p| p.pre == p.post && p.jaccard == 1.0));
    }
}

#[test]
fn swapping_pre_and_post_keeps_delta_magnitudes() {
    let a = sample_snapshot(Some("Haven"));
    let b = sample_snapshot(Some("Bind"));
    let forward = compare(&a, &b).unwrap();
    let backward = compare(&b, &a).unwrap();
    for x in &forward.per_agent {
        let y = backward.per_agent.iter().find(|y| y.agent == x.agent).unwrap();
        assert_eq!(x.delta_centroid, y.delta_centroid);
    }
    let mut f: Vec<Option<f64>> = forward.per_cluster.iter().map(|c| c.inter.delta).collect();
    let mut g: Vec<Option<f64>> = backward.per_cluster.iter().map(|c| c.inter.delta).collect();
    f.sort_by(|x, y| x.partial_cmp(y).unwrap());
    g.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(f, g);
}

proptest! {
    #[test]
    fn greedy_matching_is_sane(pre in prop::collection::vec(0usize..4, 8), post in prop::collection::vec(0usize..4, 8), seed in any::<u64>()) {
        let a = random_snapshot(seed, 8, &pre);
        let b = random_snapshot(seed ^ 1, 8, &post);
        let matching = match_clusters(&a, &b).unwrap();
        let (kp, kq) = (a.assignment.k(), b.assignment.k());
        prop_assert!(matching.pairs.len() <= kp.min(kq));
        prop_assert_eq!(matching.pairs.len() + matching.unmatched_pre.len(), kp);
        prop_assert_eq!(matching.pairs.len() + matching.unmatched_post.len(), kq);

        let weights: Vec<Vec<f64>> = (0..kp)
            .map(|i| (0..kq).map(|j| jaccard(&a.assignment.member_names(i), &b.assignment.member_names(j))).collect())
            .collect();
        let top = weights.iter().flatten().cloned().fold(0.0, f64::max);
        prop_assert_eq!(matching.pairs.iter().map(|p| p.jaccard).fold(0.0, f64::max), top);
        for p in &matching.pairs {
            prop_assert!(p.jaccard > 0.0);
            prop_assert_eq!(p.jaccard, weights[p.pre][p.post]);
        }
        let greedy: f64 = matching.pairs.iter().map(|p| p.jaccard).sum();
        let optimum = best_total(&weights, 0, &mut vec![false; kq]);
        prop_assert!(greedy >= 0.5 * optimum - 1e-12);
    }
}
