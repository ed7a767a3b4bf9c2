//! Hypergraph-to-graph expansions and the symmetric renormalisation.
//!
//! Three expansion rules turn a hypergraph into a weighted simple graph:
//!
//! * **one-edge**: each hyperedge contributes a single pair, its two most
//!   distant vertices under a signal, with weight `w(e)/|e|`;
//! * **mediators**: the extreme pair plus every remaining vertex joined to
//!   both extremes, `2|e|−3` pairs of weight `w(e)/(2|e|−3)` each;
//! * **clique**: every pair inside the hyperedge with weight
//!   `2·w(e)/(|e|(|e|−1))`, independent of any signal.
//!
//! Contributions are accumulated in hyperedge order so that the result is
//! bitwise reproducible for a given hypergraph, signal and tie-breaking seed.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercore::{Hypergraph, VertexId};
use crate::rng::index_from_word;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

/// Per-vertex signals used to choose extreme pairs (n rows, d columns).
pub type SignalMatrix<T> = DenseMatrix<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expansion {
    OneEdge,
    Mediators,
    Clique,
}

impl Expansion {
    /// Number of pairs a hyperedge of size `s` contributes.
    pub fn pairs_per_edge(self, s: usize) -> usize {
        match self {
            Expansion::OneEdge => 1,
            Expansion::Mediators => (2 * s).saturating_sub(3).max(1),
            Expansion::Clique => s * (s - 1) / 2,
        }
    }

    pub fn needs_signal(self) -> bool {
        !matches!(self, Expansion::Clique)
    }
}

/// How self-loops are set after the pair weights are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfLoops {
    /// Every vertex gets a loop of weight 1.
    #[default]
    Unit,
    /// Loop weight tops the weighted degree up to the hypergraph degree d_v.
    /// Vertices in no hyperedge get a unit loop so normalisation stays defined.
    DegreeRestoring,
}

impl std::str::FromStr for SelfLoops {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "unit" | "unit-self-loop" => Ok(SelfLoops::Unit),
            "degree-restoring" => Ok(SelfLoops::DegreeRestoring),
            other => Err(format!("unknown self-loop mode '{other}'")),
        }
    }
}

/// Symmetric weighted graph keyed by unordered vertex pairs `(u, v)`, `u < v`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n: usize,
    pairs: BTreeMap<(VertexId, VertexId), T>,
    loops: Vec<T>,
}

impl<T: Scalar> WeightedGraph<T> {
    pub fn new(n: usize) -> Self {
        WeightedGraph {
            n,
            pairs: BTreeMap::new(),
            loops: vec![T::zero(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `w` to the pair `{u, v}`. Panics if `u == v`.
    pub fn add_pair(&mut self, u: VertexId, v: VertexId, w: T) {
        assert_ne!(u, v, "pairs join distinct vertices; use set_loop for loops");
        let key = if u < v { (u, v) } else { (v, u) };
        *self.pairs.entry(key).or_insert_with(T::zero) += w;
    }

    pub fn set_loop(&mut self, v: VertexId, w: T) {
        self.loops[v] = w;
    }

    pub fn pair_weight(&self, u: VertexId, v: VertexId) -> T {
        let key = if u < v { (u, v) } else { (v, u) };
        self.pairs.get(&key).copied().unwrap_or_else(T::zero)
    }

    pub fn loops(&self) -> &[T] {
        &self.loops
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Pairs in ascending `(u, v)` order.
    pub fn pairs(&self) -> impl Iterator<Item = ((VertexId, VertexId), T)> + '_ {
        self.pairs.iter().map(|(&k, &w)| (k, w))
    }

    pub fn total_pair_weight(&self) -> T {
        self.pairs.values().copied().sum()
    }

    /// Sum of incident pair weights, loops excluded.
    pub fn pair_degrees(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for (&(u, v), &w) in &self.pairs {
            d[u] += w;
            d[v] += w;
        }
        d
    }

    pub fn relabel(&self, perm: &[VertexId]) -> Self {
        assert_eq!(perm.len(), self.n);
        let mut out = WeightedGraph::new(self.n);
        for (&(u, v), &w) in &self.pairs {
            out.add_pair(perm[u], perm[v], w);
        }
        for (v, &w) in self.loops.iter().enumerate() {
            out.loops[perm[v]] = w;
        }
        out
    }
}

/// Returns the pair `(i, j)`, `i < j`, of hyperedge `edge` that maximises
/// ‖S_i − S_j‖₂. Exactly one 64-bit word is drawn from `rng` per call; it
/// picks uniformly among maximising pairs when there are ties.
pub fn extreme_pair<T: Scalar, R: RngCore + ?Sized>(
    h: &Hypergraph,
    edge: usize,
    signal: &SignalMatrix<T>,
    rng: &mut R,
) -> (VertexId, VertexId) {
    extreme_pair_of(h.edge(edge), signal, rng)
}

pub(crate) fn extreme_pair_of<T: Scalar, R: RngCore + ?Sized>(
    e: &[VertexId],
    signal: &SignalMatrix<T>,
    rng: &mut R,
) -> (VertexId, VertexId) {
    debug_assert!(e.len() >= 2);
    let word = rng.next_u64();
    if e.len() == 2 {
        return (e[0], e[1]);
    }
    let mut best = T::neg_infinity();
    let mut ties: Vec<(VertexId, VertexId)> = Vec::new();
    for (a, &i) in e.iter().enumerate() {
        let si = signal.row(i);
        for &j in &e[a + 1..] {
            let dist: T = si
                .iter()
                .zip(signal.row(j))
                .map(|(&x, &y)| (x - y) * (x - y))
                .sum();
            if dist > best {
                best = dist;
                ties.clear();
                ties.push((i, j));
            } else if dist == best {
                ties.push((i, j));
            }
        }
    }
    ties[index_from_word(word, ties.len())]
}

fn check_signal<T: Scalar>(h: &Hypergraph, signal: &SignalMatrix<T>) -> Result<()> {
    if signal.rows() != h.n() {
        return Err(Error::dims("signal rows", h.n(), signal.rows()));
    }
    Ok(())
}

/// Expands `h` under `rule`. `signal` is required by the one-edge and
/// mediator rules; clique expansion ignores it and draws nothing from `rng`.
pub fn expand<T: Scalar, R: RngCore + ?Sized>(
    h: &Hypergraph,
    rule: Expansion,
    signal: Option<&SignalMatrix<T>>,
    rng: &mut R,
    loops: SelfLoops,
) -> Result<WeightedGraph<T>> {
    let mut g = WeightedGraph::new(h.n());
    match rule {
        Expansion::Clique => add_clique_pairs(h, &mut g),
        Expansion::OneEdge | Expansion::Mediators => {
            let signal = signal.ok_or_else(|| {
                Error::InvalidArgument(format!("{rule:?} expansion requires a signal matrix"))
            })?;
            check_signal(h, signal)?;
            for (e, w) in h.iter() {
                let (i, j) = extreme_pair_of(e, signal, rng);
                let s = e.len();
                if rule == Expansion::OneEdge {
                    g.add_pair(i, j, T::lit(w) / T::from_count(s));
                    continue;
                }
                let pw = T::lit(w) / T::from_count(2 * s - 3);
                g.add_pair(i, j, pw);
                for &k in e.iter().filter(|&&k| k != i && k != j) {
                    g.add_pair(i, k, pw);
                    g.add_pair(j, k, pw);
                }
            }
        }
    }
    apply_loops(h, &mut g, loops);
    Ok(g)
}

fn apply_loops<T: Scalar>(h: &Hypergraph, g: &mut WeightedGraph<T>, loops: SelfLoops) {
    match loops {
        SelfLoops::Unit => g.loops.iter_mut().for_each(|l| *l = T::one()),
        SelfLoops::DegreeRestoring => {
            let target = h.degrees();
            let have = g.pair_degrees();
            for ((l, &t), &hv) in g.loops.iter_mut().zip(&target.0).zip(&have) {
                let d = T::lit(t);
                *l = if d > T::zero() {
                    (d - hv).max(T::zero())
                } else {
                    T::one()
                };
            }
        }
    }
}

pub fn expand_one_edge<T: Scalar, R: RngCore + ?Sized>(
    h: &Hypergraph,
    signal: &SignalMatrix<T>,
    rng: &mut R,
) -> Result<WeightedGraph<T>> {
    expand(h, Expansion::OneEdge, Some(signal), rng, SelfLoops::Unit)
}

pub fn expand_mediators<T: Scalar, R: RngCore + ?Sized>(
    h: &Hypergraph,
    signal: &SignalMatrix<T>,
    rng: &mut R,
) -> Result<WeightedGraph<T>> {
    expand(h, Expansion::Mediators, Some(signal), rng, SelfLoops::Unit)
}

pub fn expand_clique<T: Scalar>(h: &Hypergraph) -> WeightedGraph<T> {
    let mut g = WeightedGraph::new(h.n());
    add_clique_pairs(h, &mut g);
    apply_loops(h, &mut g, SelfLoops::Unit);
    g
}

fn add_clique_pairs<T: Scalar>(h: &Hypergraph, g: &mut WeightedGraph<T>) {
    for (e, w) in h.iter() {
        let s = e.len();
        let pw = T::lit(2.0) * T::lit(w) / T::from_count(s * (s - 1));
        for (a, &u) in e.iter().enumerate() {
            for &v in &e[a + 1..] {
                g.add_pair(u, v, pw);
            }
        }
    }
}

/// Sparse symmetric matrix `D̃^{-1/2} Ã D̃^{-1/2}` in CSR layout, where `Ã`
/// is the pair weights plus the diagonal self-loops and `D̃` its row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<VertexId>,
    vals: Vec<T>,
    degrees: Vec<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn identity(n: usize) -> Self {
        NormalizedAdjacency {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![T::one(); n],
            degrees: vec![T::one(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Stored entries, diagonal included.
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Row sums D̃ of the unnormalised matrix.
    pub fn degrees(&self) -> &[T] {
        &self.degrees
    }

    /// `(column, value)` entries of row `u` in ascending column order.
    pub fn row(&self, u: usize) -> impl Iterator<Item = (VertexId, T)> + '_ {
        let range = self.row_ptr[u]..self.row_ptr[u + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, u: usize, v: usize) -> T {
        let range = self.row_ptr[u]..self.row_ptr[u + 1];
        match self.cols[range.clone()].binary_search(&v) {
            Ok(pos) => self.vals[range.start + pos],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for u in 0..self.n {
            for (v, w) in self.row(u) {
                m[(u, v)] = w;
            }
        }
        m
    }

    /// Order-independent fingerprint of the stored structure and values.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.n.hash(&mut hasher);
        self.row_ptr.hash(&mut hasher);
        self.cols.hash(&mut hasher);
        for v in &self.vals {
            v.as_f64().to_bits().hash(&mut hasher);
        }
        hasher.finish()
    }

    pub(crate) fn raw(&self) -> (&[usize], &[VertexId], &[T]) {
        (&self.row_ptr, &self.cols, &self.vals)
    }
}

pub fn normalize<T: Scalar>(g: &WeightedGraph<T>) -> Result<NormalizedAdjacency<T>> {
    let n = g.n;
    let mut rows: Vec<Vec<(VertexId, T)>> = vec![Vec::new(); n];
    for (v, &w) in g.loops.iter().enumerate() {
        if w > T::zero() {
            rows[v].push((v, w));
        }
    }
    for (&(u, v), &w) in &g.pairs {
        if w > T::zero() {
            rows[u].push((v, w));
            rows[v].push((u, w));
        }
    }
    let mut degrees = vec![T::zero(); n];
    for (u, row) in rows.iter_mut().enumerate() {
        row.sort_unstable_by_key(|&(c, _)| c);
        degrees[u] = row.iter().map(|&(_, w)| w).sum();
        if degrees[u].is_nan() || degrees[u] <= T::zero() {
            return Err(Error::IsolatedVertex(u));
        }
    }
    let nnz = rows.iter().map(Vec::len).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(nnz);
    let mut vals = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (u, row) in rows.into_iter().enumerate() {
        for (v, w) in row {
            cols.push(v);
            vals.push(w / (degrees[u] * degrees[v]).sqrt());
        }
        row_ptr.push(cols.len());
    }
    Ok(NormalizedAdjacency {
        n,
        row_ptr,
        cols,
        vals,
        degrees,
    })
}
