mod common;

use proptest::prelude::*;
use teamroles::cooccur::{build_cooccurrence, normalize};
use teamroles::ingest::{
    build_roster, expand, expand_and_filter, filter_records, parse_records, write_wide, ParseOptions, RawRecord,
};

const AGENTS: [&str; 10] = [
    "Jett", "Raze", "Omen", "Astra", "Sova", "Fade", "Killjoy", "Cypher", "Sage", "KAY/O",
];
const MAPS: [&str; 4] = ["Haven", "Bind", "haven", ""];

fn record_strategy() -> impl Strategy<Value = RawRecord> {
    (
        prop::sample::subsequence(AGENTS.to_vec(), 5),
        prop::sample::select(MAPS.to_vec()),
        1u64..4,
        0u64..3,
    )
        .prop_map(|(agents, map, maps_played, team)| {
            let mut agents: Vec<String> = agents.into_iter().map(String::from).collect();
            agents.sort_by_key(|a| teamroles::ingest::agent_key(a));
            RawRecord {
                line: 0,
                tournament: "T".into(),
                stage: "S".into(),
                match_type: "Bo3".into(),
                map: map.into(),
                team: format!("team{team}"),
                agents,
                wins: maps_played,
                losses: 0,
                maps_played,
            }
        })
}

fn sample_records() -> Vec<RawRecord> {
    let file = std::fs::File::open(common::sample_dataset()).unwrap();
    parse_records(file, &ParseOptions::default()).unwrap().records
}

#[test]
fn sample_dataset_conserves_pairs_and_plays() {
    let records = sample_records();
    for filter in [None, Some("Haven"), Some("bind")] {
        let kept = filter_records(&records, filter).retained;
        let comps = expand(&kept);
        let plays: u64 = kept.iter().map(|r| r.maps_played).sum();
        assert_eq!(plays as usize, comps.len());
        let roster = build_roster(&comps).unwrap();
        let c = build_cooccurrence(&comps, &roster).unwrap();
        assert_eq!(c.pair_total(), 10 * comps.len() as u64);
        for i in 0..c.len() {
            assert_eq!(c.get(i, i), 0);
            for j in 0..c.len() {
                assert_eq!(c.get(i, j), c.get(j, i));
            }
        }
    }
}

#[test]
fn sample_dataset_parses_deterministically() {
    let bytes = std::fs::read(common::sample_dataset()).unwrap();
    let a = parse_records(&bytes[..], &ParseOptions::default()).unwrap();
    let b = parse_records(&bytes[..], &ParseOptions::default()).unwrap();
    assert_eq!(a.records, b.records);
    let (ca, cb) = (expand(&a.records), expand(&b.records));
    assert_eq!(ca, cb);
    assert_eq!(build_roster(&ca).unwrap(), build_roster(&cb).unwrap());
}

proptest! {
    #[test]
    fn expansion_conserves_plays(records in prop::collection::vec(record_strategy(), 0..25), map in prop::option::of(prop::sample::select(MAPS.to_vec()))) {
        let kept = filter_records(&records, map).retained;
        let plays: u64 = kept.iter().map(|r| r.maps_played).sum();
        prop_assert_eq!(expand(&kept).len() as u64, plays);
    }

    #[test]
    fn filtering_never_grows_output(records in prop::collection::vec(record_strategy(), 0..25), map in prop::sample::select(MAPS.to_vec())) {
        prop_assert!(expand_and_filter(&records, Some(map)).len() <= expand_and_filter(&records, None).len());
    }

    #[test]
    fn wide_round_trip_is_lossless(records in prop::collection::vec(record_strategy(), 1..15)) {
        let mut buf = Vec::new();
        write_wide(&records, &mut buf, b',').unwrap();
        let back = parse_records(&buf[..], &ParseOptions::default()).unwrap();
        prop_assert_eq!(back.records.len(), records.len());
        for (a, b) in back.records.iter().zip(&records) {
            prop_assert_eq!(&a.agents, &b.agents);
            prop_assert_eq!(&a.map, &b.map);
            prop_assert_eq!(a.maps_played, b.maps_played);
        }
    }

    #[test]
    fn pair_totals_and_normalization_hold(records in prop::collection::vec(record_strategy(), 1..25)) {
        let comps = expand(&records);
        let roster = build_roster(&comps).unwrap();
        let c = build_cooccurrence(&comps, &roster).unwrap();
        prop_assert_eq!(c.pair_total(), 10 * comps.len() as u64);
        for v in normalize(&c) {
            if v.is_defined() {
                prop_assert!((v.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
