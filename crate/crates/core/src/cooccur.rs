//! Joint-pick counts and per-agent teammate probability vectors.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::{g17, g17_vec, G17};
use crate::ingest::{Roster, TeamComposition};

/// Symmetric joint-pick counts with a zero diagonal, indexed in roster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    roster: Roster,
    counts: Vec<u64>,
}

impl CooccurrenceMatrix {
    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn len(&self) -> usize {
        self.roster.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roster.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[u64] {
        let n = self.len();
        &self.counts[i * n..(i + 1) * n]
    }

    /// Sum of counts strictly above the diagonal.
    pub fn pair_total(&self) -> u64 {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .sum()
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["agent".to_string()];
        header.extend(self.roster.names().iter().cloned());
        writer.write_record(&header)?;
        for (i, name) in self.roster.names().iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.row(i).iter().map(u64::to_string));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> CooccurrenceJson {
        CooccurrenceJson {
            agents: self.roster.names().to_vec(),
            counts: (0..self.len()).map(|i| self.row(i).to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CooccurrenceJson {
    pub agents: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Counts, for every unordered agent pair, the compositions containing both.
///
/// Duplicate compositions accumulate.
pub fn build_cooccurrence(comps: &[TeamComposition], roster: &Roster) -> Result<CooccurrenceMatrix> {
    let n = roster.len();
    let mut counts = vec![0u64; n * n];
    let mut slots = Vec::with_capacity(5);
    for comp in comps {
        slots.clear();
        for agent in &comp.agents {
            let p = roster
                .position(agent)
                .ok_or_else(|| Error::UnknownAgent(agent.clone()))?;
            slots.push(p);
        }
        for (a, &i) in slots.iter().enumerate() {
            for &j in &slots[a + 1..] {
                counts[i * n + j] += 1;
                counts[j * n + i] += 1;
            }
        }
    }
    Ok(CooccurrenceMatrix {
        roster: roster.clone(),
        counts,
    })
}

/// Teammate distribution of one agent over the full roster.
///
/// An agent that never appears with anyone has `support_count == 0`; its
/// `probs` are all zero and it is excluded from distance computations.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    pub agent: String,
    pub probs: Vec<f64>,
    pub support_count: u64,
}

impl ProbabilityVector {
    /// Builds a vector directly from probabilities (which should already sum to 1).
    pub fn new(agent: impl Into<String>, probs: Vec<f64>) -> Self {
        ProbabilityVector {
            agent: agent.into(),
            probs,
            support_count: 1,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.support_count > 0
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Divides `weights` by their L1 norm; `None` when the norm is zero.
pub fn l1_normalize(weights: &[f64]) -> Option<Vec<f64>> {
    let norm: f64 = weights.iter().map(|w| w.abs()).sum();
    (norm > 0.0).then(|| weights.iter().map(|w| w / norm).collect())
}

/// One probability vector per roster agent, in roster order.
pub fn normalize(matrix: &CooccurrenceMatrix) -> Vec<ProbabilityVector> {
    let n = matrix.len();
    (0..n)
        .map(|i| {
            let row = matrix.row(i);
            let support_count: u64 = row.iter().sum();
            let weights: Vec<f64> = row.iter().map(|&c| c as f64).collect();
            ProbabilityVector {
                agent: matrix.roster().name(i).to_string(),
                probs: l1_normalize(&weights).unwrap_or_else(|| vec![0.0; n]),
                support_count,
            }
        })
        .collect()
}

pub fn write_vectors_csv<W: Write>(vectors: &[ProbabilityVector], roster: &Roster, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let mut header = vec!["agent".to_string(), "support_count".into(), "defined".into()];
    header.extend(roster.names().iter().cloned());
    writer.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.agent.clone(), v.support_count.to_string(), v.is_defined().to_string()];
        row.extend(v.probs.iter().map(|&p| g17(p)));
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct VectorJson {
    pub agent: String,
    pub support_count: u64,
    pub defined: bool,
    pub probs: Vec<G17>,
}

pub fn vectors_to_json(vectors: &[ProbabilityVector]) -> Vec<VectorJson> {
    vectors
        .iter()
        .map(|v| VectorJson {
            agent: v.agent.clone(),
            support_count: v.support_count,
            defined: v.is_defined(),
            probs: g17_vec(&v.probs),
        })
        .collect()
}
