//! Canonical hypergraph representation.
//!
//! Hyperedges are stored as strictly increasing vertex lists. Duplicate
//! hyperedges are kept; downstream expansions accumulate their contributions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    n: usize,
    edges: Vec<Vec<VertexId>>,
    weights: Vec<f64>,
}

impl Hypergraph {
    /// Builds a unit-weight hypergraph, canonicalising each hyperedge and
    /// rejecting any invariant violation.
    pub fn new(n: usize, edges: Vec<Vec<VertexId>>) -> Result<Self> {
        let weights = vec![1.0; edges.len()];
        Self::with_weights(n, edges, weights)
    }

    pub fn with_weights(n: usize, edges: Vec<Vec<VertexId>>, weights: Vec<f64>) -> Result<Self> {
        let h = Self::new_unchecked(n, edges, weights);
        match validate(&h) {
            Ok(()) => Ok(h),
            Err(report) => Err(Error::InvalidHypergraph(report)),
        }
    }

    /// Canonicalises hyperedges (sort + dedup) without checking invariants.
    /// Use [`validate`] before handing the result to any expansion.
    pub fn new_unchecked(n: usize, mut edges: Vec<Vec<VertexId>>, weights: Vec<f64>) -> Self {
        for e in &mut edges {
            e.sort_unstable();
            e.dedup();
        }
        Hypergraph { n, edges, weights }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<VertexId>] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &[VertexId] {
        &self.edges[idx]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }

    /// `(hyperedge, weight)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (&[VertexId], f64)> + '_ {
        self.edges.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }

    pub fn max_edge_size(&self) -> usize {
        self.edges.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// d_v = sum of w(e) over hyperedges containing v.
    pub fn degrees(&self) -> DegreeVector {
        let mut d = vec![0.0; self.n];
        for (e, w) in self.iter() {
            for &v in e {
                d[v] += w;
            }
        }
        DegreeVector(d)
    }

    /// Number of hyperedges containing each vertex, ignoring weights.
    pub fn edge_degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for e in &self.edges {
            for &v in e {
                d[v] += 1;
            }
        }
        d
    }

    /// For each vertex, the indices of hyperedges that contain it.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n];
        for (i, e) in self.edges.iter().enumerate() {
            for &v in e {
                inc[v].push(i);
            }
        }
        inc
    }

    pub fn size_counts(&self) -> SizeCounts {
        let mut counts = SizeCounts::default();
        for e in &self.edges {
            let s = e.len() as u64;
            counts.incidences += s;
            counts.mediator_pairs += 2 * s - 3;
            counts.clique_pairs += s * (s - 1) / 2;
        }
        counts
    }

    /// Applies the vertex relabeling `v -> perm[v]`.
    pub fn relabel(&self, perm: &[VertexId]) -> Hypergraph {
        assert_eq!(perm.len(), self.n, "permutation length must equal n");
        let edges = self
            .edges
            .iter()
            .map(|e| e.iter().map(|&v| perm[v]).collect())
            .collect();
        Hypergraph::new_unchecked(self.n, edges, self.weights.clone())
    }
}

/// Validates every hypergraph invariant, collecting all violations.
pub fn validate(h: &Hypergraph) -> std::result::Result<(), ValidationReport> {
    let mut violations = Vec::new();
    if h.weights.len() != h.edges.len() {
        violations.push(Violation {
            edge: None,
            kind: ViolationKind::WeightCount {
                edges: h.edges.len(),
                weights: h.weights.len(),
            },
        });
    }
    for (i, e) in h.edges.iter().enumerate() {
        if e.len() < 2 {
            violations.push(Violation {
                edge: Some(i),
                kind: ViolationKind::TooSmall { size: e.len() },
            });
        }
        if e.windows(2).any(|w| w[0] >= w[1]) {
            violations.push(Violation {
                edge: Some(i),
                kind: ViolationKind::NotCanonical,
            });
        }
        for &v in e {
            if v >= h.n {
                violations.push(Violation {
                    edge: Some(i),
                    kind: ViolationKind::VertexOutOfRange { vertex: v, n: h.n },
                });
            }
        }
        if let Some(&w) = h.weights.get(i) {
            if !(w.is_finite() && w > 0.0) {
                violations.push(Violation {
                    edge: Some(i),
                    kind: ViolationKind::BadWeight { weight: w },
                });
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationReport { violations })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Offending hyperedge index, if the violation is tied to one.
    pub edge: Option<usize>,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    TooSmall { size: usize },
    VertexOutOfRange { vertex: VertexId, n: usize },
    BadWeight { weight: f64 },
    NotCanonical,
    WeightCount { edges: usize, weights: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.edge {
            write!(f, "hyperedge {i}: ")?;
        }
        match &self.kind {
            ViolationKind::TooSmall { size } => write!(f, "hyperedge size {size} < 2"),
            ViolationKind::VertexOutOfRange { vertex, n } => {
                write!(f, "vertex {vertex} out of range (n = {n})")
            }
            ViolationKind::BadWeight { weight } => write!(f, "weight {weight} is not finite and positive"),
            ViolationKind::NotCanonical => write!(f, "vertex ids not strictly increasing"),
            ViolationKind::WeightCount { edges, weights } => {
                write!(f, "{weights} weights for {edges} hyperedges")
            }
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVector(pub Vec<f64>);

impl DegreeVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Edge-count statistics: N = Σ|e|, N_m = Σ(2|e|−3), N_c = Σ|e|(|e|−1)/2.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeCounts {
    #[serde(rename = "N")]
    pub incidences: u64,
    #[serde(rename = "N_m")]
    pub mediator_pairs: u64,
    #[serde(rename = "N_c")]
    pub clique_pairs: u64,
}
