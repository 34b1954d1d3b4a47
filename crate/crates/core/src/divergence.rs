//! Jensen-Shannon divergence between teammate distributions.
//!
//! All logarithms are base 2, so divergences lie in `[0, 1]` and disjoint
//! supports score exactly 1. Terms with zero probability contribute nothing;
//! no smoothing constant is ever added.

use std::io::Write;

use serde::Serialize;

use crate::cooccur::ProbabilityVector;
use crate::error::{Error, Result};
use crate::fmt::{g17, g17_vec, G17};

pub const LOG_BASE: u32 = 2;

/// Which quantity a [`DistanceMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    /// The divergence itself.
    #[default]
    Jsd,
    /// Its square root, which is a proper metric.
    SqrtJsd,
}

/// `Σ p_k log2(p_k / q_k)` with `0·log(0/x) = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut sum = 0.0;
    for (k, (&pk, &qk)) in p.iter().zip(q).enumerate() {
        if pk > 0.0 {
            if qk <= 0.0 {
                return Err(Error::KlUndefined { index: k });
            }
            sum += pk * (pk / qk).log2();
        }
    }
    Ok(sum)
}

/// Base-2 Shannon entropy.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.log2()).sum::<f64>()
}

/// Jensen-Shannon divergence of two distributions given as slices.
///
/// Evaluates `½ KL(p‖m) + ½ KL(q‖m)` with `m = (p + q) / 2` in a single
/// pass in ascending index order. The sum is symmetric in `p` and `q`
/// term by term, so swapping the arguments gives a bit-identical result.
pub fn jsd_slices(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut sum = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        let mk = 0.5 * (pk + qk);
        if mk <= 0.0 {
            continue;
        }
        let mut term = 0.0;
        if pk > 0.0 {
            term += pk * (pk / mk).log2();
        }
        if qk > 0.0 {
            term += qk * (qk / mk).log2();
        }
        sum += term;
    }
    // rounding can push the result a few ulps outside [0, 1]
    Ok((0.5 * sum).clamp(0.0, 1.0))
}

pub fn jsd(vi: &ProbabilityVector, vj: &ProbabilityVector) -> Result<f64> {
    jsd_slices(&vi.probs, &vj.probs)
}

/// Symmetric matrix of pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    agents: Vec<String>,
    values: Vec<f64>,
    kind: DistanceKind,
}

impl DistanceMatrix {
    /// Validates and wraps a square matrix of dissimilarities.
    pub fn new(agents: Vec<String>, rows: Vec<Vec<f64>>, kind: DistanceKind) -> Result<Self> {
        let m = agents.len();
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidMatrix(format!(
                "expected a {m}x{m} matrix for {m} labels"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {d}")));
                }
                if (d - rows[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DistanceMatrix {
            agents,
            values: rows.into_iter().flatten().collect(),
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn log_base(&self) -> u32 {
        LOG_BASE
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn position(&self, agent: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == agent)
    }

    /// Same matrix with every entry multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DistanceMatrix {
        DistanceMatrix {
            agents: self.agents.clone(),
            values: self.values.iter().map(|d| d * factor).collect(),
            kind: self.kind,
        }
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(sink);
        let mut header = vec!["agent".to_string()];
        header.extend(self.agents.iter().cloned());
        writer.write_record(&header)?;
        for (i, name) in self.agents.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(self.row(i).iter().map(|&d| g17(d)));
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> DistanceJson {
        DistanceJson {
            agents: self.agents.clone(),
            log_base: LOG_BASE,
            kind: self.kind,
            values: (0..self.len()).map(|i| g17_vec(self.row(i))).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceJson {
    pub agents: Vec<String>,
    pub log_base: u32,
    pub kind: DistanceKind,
    pub values: Vec<Vec<G17>>,
}

/// Pairwise divergences over the defined vectors, in input order.
///
/// Undefined (zero-support) vectors are skipped.
pub fn distance_matrix(vectors: &[ProbabilityVector], kind: DistanceKind) -> Result<DistanceMatrix> {
    let defined: Vec<&ProbabilityVector> = vectors.iter().filter(|v| v.is_defined()).collect();
    let m = defined.len();
    if m < 2 {
        return Err(Error::NothingToCluster { needed: 2, found: m });
    }
    let mut rows = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = jsd(defined[i], defined[j])?;
            let d = match kind {
                DistanceKind::Jsd => d,
                DistanceKind::SqrtJsd => d.sqrt(),
            };
            rows[i][j] = d;
            rows[j][i] = d;
        }
    }
    DistanceMatrix::new(defined.iter().map(|v| v.agent.clone()).collect(), rows, kind)
}
