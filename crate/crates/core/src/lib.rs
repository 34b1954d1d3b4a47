//! Agent role discovery from team compositions.
//!
//! Compositions of five agents are turned into per-agent teammate
//! distributions, compared with the base-2 Jensen-Shannon divergence,
//! clustered with average linkage, and cut at the cluster count with the best
//! mean silhouette. Two such analyses (say, before and after a balance patch)
//! can then be compared cluster by cluster and agent by agent.
//!
//! ```
//! use teamroles::ingest::{parse_records, expand_and_filter, ParseOptions};
//! use teamroles::pipeline::{analyze, AnalysisOptions};
//!
//! let csv = "tournament,stage,match_type,map,team,agent_1,agent_2,agent_3,agent_4,agent_5,wins,losses,maps_played
//! VCT,Groups,Bo3,Haven,T1,Jett,Omen,Sova,Killjoy,Breach,1,0,2
//! VCT,Groups,Bo3,Haven,T2,Raze,Astra,Fade,Cypher,Skye,0,1,1
//! VCT,Groups,Bo3,Haven,T3,Neon,Brimstone,Sova,Chamber,KAY/O,1,1,2
//! ";
//! let parsed = parse_records(csv.as_bytes(), &ParseOptions::default()).unwrap();
//! let comps = expand_and_filter(&parsed.records, Some("Haven"));
//! let snapshot = analyze(&comps, &AnalysisOptions::default()).unwrap();
//! assert_eq!(snapshot.compositions, 5);
//! assert!(snapshot.k >= 2);
//! ```

pub mod cooccur;
pub mod diagnostics;
pub mod divergence;
pub mod error;
pub mod fmt;
pub mod hac;
pub mod ingest;
pub mod patch_impact;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
