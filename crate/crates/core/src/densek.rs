//! Densest-k-subhypergraph: greedy heuristics, an exhaustive oracle, a
//! synthetic instance generator and a learned solver with several output maps.
//!
//! The density of a vertex set is the number of hyperedges it fully contains.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expand::Expansion;
use crate::hypercore::Hypergraph;
use crate::models::{layerwise_propagation, TrainConfig};
use crate::rng::{stream, Stream};
use crate::tensor::{adam_step, backward_from_logits, forward_gcn_layers, DenseMatrix, DropoutMasks, GcnParams, OptimizerState};

/// Largest number of subsets [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseKInstance {
    hypergraph: Hypergraph,
    k: usize,
}

impl DenseKInstance {
    pub fn new(hypergraph: Hypergraph, k: usize) -> Result<Self> {
        if k == 0 || k > hypergraph.n() {
            return Err(Error::InvalidArgument(format!(
                "k = {k} must lie in 1..={}",
                hypergraph.n()
            )));
        }
        Ok(DenseKInstance { hypergraph, k })
    }

    /// `k = floor(frac · n)`.
    pub fn from_fraction(hypergraph: Hypergraph, frac: f64) -> Result<Self> {
        if !(frac > 0.0 && frac <= 1.0) {
            return Err(Error::InvalidArgument(format!("k fraction {frac} not in (0, 1]")));
        }
        let k = (frac * hypergraph.n() as f64).floor() as usize;
        Self::new(hypergraph, k)
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraph
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.hypergraph.n()
    }
}

/// Number of hyperedges with every vertex in `w`. Ids outside the vertex
/// range are ignored.
pub fn density(h: &Hypergraph, w: &[usize]) -> usize {
    let mut member = vec![false; h.n()];
    for &v in w {
        if v < member.len() {
            member[v] = true;
        }
    }
    h.edges().iter().filter(|e| e.iter().all(|&v| member[v])).count()
}

/// The `k` vertices in the most hyperedges (ties to the lower id), sorted.
pub fn max_degree(inst: &DenseKInstance) -> Vec<usize> {
    let deg = inst.hypergraph.edge_degrees();
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| deg[b].cmp(&deg[a]).then(a.cmp(&b)));
    order.truncate(inst.k);
    order.sort_unstable();
    order
}

/// Greedy peeling: `n − k` times, drop a vertex of minimum residual degree
/// (lowest id on ties) together with every residual hyperedge through it.
/// Returns the surviving vertices, sorted.
pub fn remove_min_degree(inst: &DenseKInstance) -> Vec<usize> {
    let h = &inst.hypergraph;
    let incidence = h.incidence();
    let mut deg = h.edge_degrees();
    let mut alive_edge = vec![true; h.num_edges()];
    let mut in_pool = vec![true; h.n()];
    let mut queue: BTreeSet<(usize, usize)> = (0..h.n()).map(|v| (deg[v], v)).collect();
    for _ in 0..inst.n() - inst.k {
        let (_, v) = queue.pop_first().expect("pool larger than k");
        in_pool[v] = false;
        for &e in &incidence[v] {
            if !alive_edge[e] {
                continue;
            }
            alive_edge[e] = false;
            for &u in h.edge(e) {
                if in_pool[u] {
                    queue.remove(&(deg[u], u));
                    deg[u] -= 1;
                    queue.insert((deg[u], u));
                }
            }
        }
    }
    (0..h.n()).filter(|&v| in_pool[v]).collect()
}

fn binomial_capped(n: usize, k: usize, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Exact optimum by enumerating every k-subset in lexicographic order; the
/// first subset reaching the maximum density is returned.
pub fn brute_force(inst: &DenseKInstance) -> Result<(Vec<usize>, usize)> {
    let (n, k) = (inst.n(), inst.k);
    if binomial_capped(n, k, BRUTE_FORCE_LIMIT).is_none() {
        return Err(Error::TooLarge {
            n,
            k,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let h = &inst.hypergraph;
    let mut combo: Vec<usize> = (0..k).collect();
    let mut member = vec![false; n];
    let mut best: Option<(Vec<usize>, usize)> = None;
    loop {
        member.iter_mut().for_each(|m| *m = false);
        combo.iter().for_each(|&v| member[v] = true);
        let d = h.edges().iter().filter(|e| e.iter().all(|&v| member[v])).count();
        if best.as_ref().is_none_or(|(_, b)| d > *b) {
            best = Some((combo.clone(), d));
        }
        // Advance to the next combination in lexicographic order.
        let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[i] += 1;
        for j in i + 1..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// A generated instance with its planted set.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKSample {
    pub hypergraph: Hypergraph,
    /// 1 for vertices of the planted set, 0 otherwise.
    pub target: Vec<u8>,
}

impl DenseKSample {
    pub fn planted(&self) -> Vec<usize> {
        (0..self.target.len()).filter(|&v| self.target[v] == 1).collect()
    }

    pub fn k(&self) -> usize {
        self.target.iter().filter(|&&t| t == 1).count()
    }
}

pub const GEN_MIN_EDGE: usize = 2;
pub const GEN_MAX_EDGE: usize = 10;

/// Plants a uniform k-subset W and draws ⌊n/2⌋ hyperedges. Each has a size
/// uniform in 2..=10; with probability `p` its vertices come from W, otherwise
/// from the complement. A size larger than the chosen pool is re-drawn.
pub fn gen_sample<R: Rng + ?Sized>(n: usize, k: usize, p: f64, rng: &mut R) -> Result<DenseKSample> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} not in (0, 1)")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
    }
    if k < GEN_MIN_EDGE || n - k < GEN_MIN_EDGE {
        return Err(Error::InvalidArgument(format!(
            "both the planted set ({k}) and its complement ({}) need at least {GEN_MIN_EDGE} vertices",
            n - k
        )));
    }
    let mut inside = index::sample(rng, n, k).into_vec();
    inside.sort_unstable();
    let mut target = vec![0u8; n];
    inside.iter().for_each(|&v| target[v] = 1);
    let outside: Vec<usize> = (0..n).filter(|&v| target[v] == 0).collect();
    let mut edges = Vec::with_capacity(n / 2);
    for _ in 0..n / 2 {
        let pool = if rng.random_bool(p) { &inside } else { &outside };
        let size = loop {
            let s = rng.random_range(GEN_MIN_EDGE..=GEN_MAX_EDGE);
            if s <= pool.len() {
                break s;
            }
        };
        edges.push(index::sample(rng, pool.len(), size).into_iter().map(|i| pool[i]).collect());
    }
    Ok(DenseKSample {
        hypergraph: Hypergraph::new(n, edges)?,
        target,
    })
}

/// Per-vertex input features for the learned solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    /// Normalised degree, fraction of vertices within two hops, constant 1.
    #[default]
    Structural,
    /// Normalised degree and constant 1.
    Degree,
    /// Normalised degree, constant 1 and [`GAUSSIAN_DIM`] standard normal columns.
    Gaussian,
}

pub const GAUSSIAN_DIM: usize = 16;

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Structural => "structural",
            FeatureKind::Degree => "degree",
            FeatureKind::Gaussian => "gaussian",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeatureKind::Structural => 3,
            FeatureKind::Degree => 2,
            FeatureKind::Gaussian => 2 + GAUSSIAN_DIM,
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [FeatureKind::Structural, FeatureKind::Degree, FeatureKind::Gaussian]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature kind '{s}'")))
    }
}

/// Number of distinct vertices (the vertex itself included) reachable through
/// at most two hyperedges, for every vertex.
pub fn two_hop_reach(h: &Hypergraph) -> Vec<usize> {
    let incidence = h.incidence();
    let n = h.n();
    let mut seen_vertex = vec![usize::MAX; n];
    let mut seen_edge = vec![usize::MAX; h.num_edges()];
    let mut out = vec![0; n];
    let mut ring = Vec::new();
    for v in 0..n {
        // Vertices sharing a hyperedge with v (v included) form the first ring.
        ring.clear();
        seen_vertex[v] = v;
        ring.push(v);
        for &e in &incidence[v] {
            seen_edge[e] = v;
            for &u in h.edge(e) {
                if seen_vertex[u] != v {
                    seen_vertex[u] = v;
                    ring.push(u);
                }
            }
        }
        let mut count = ring.len();
        for &u in &ring {
            for &f in &incidence[u] {
                if seen_edge[f] == v {
                    continue;
                }
                seen_edge[f] = v;
                for &w in h.edge(f) {
                    if seen_vertex[w] != v {
                        seen_vertex[w] = v;
                        count += 1;
                    }
                }
            }
        }
        out[v] = count;
    }
    out
}

pub fn vertex_features<R: Rng + ?Sized>(h: &Hypergraph, kind: FeatureKind, rng: &mut R) -> DenseMatrix<f64> {
    let n = h.n();
    let deg = h.edge_degrees();
    let max_deg = deg.iter().copied().max().unwrap_or(0).max(1) as f64;
    let two = match kind {
        FeatureKind::Structural => two_hop_reach(h),
        _ => Vec::new(),
    };
    let dim = kind.dim();
    let mut x = DenseMatrix::zeros(n, dim);
    for v in 0..n {
        let row = x.row_mut(v);
        row[0] = deg[v] as f64 / max_deg;
        row[1] = 1.0;
        match kind {
            FeatureKind::Structural => row[2] = two[v] as f64 / n as f64,
            FeatureKind::Degree => {}
            FeatureKind::Gaussian => row[2..].iter_mut().for_each(|r| *r = rng.sample(StandardNormal)),
        }
    }
    x
}

/// `M` probability vectors over the vertices of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMaps {
    maps: Vec<Vec<f64>>,
}

impl ProbabilityMaps {
    pub fn new(maps: Vec<Vec<f64>>) -> Result<Self> {
        let n = maps.first().map_or(0, Vec::len);
        if maps.iter().any(|m| m.len() != n) {
            return Err(Error::InvalidArgument("probability maps differ in length".into()));
        }
        if maps.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("probability outside [0, 1]".into()));
        }
        Ok(ProbabilityMaps { maps })
    }

    /// Column-wise logistic sigmoid of an `n × M` logit matrix.
    pub fn from_logits(logits: &DenseMatrix<f64>) -> Self {
        let maps = (0..logits.cols())
            .map(|m| (0..logits.rows()).map(|v| sigmoid(logits[(v, m)])).collect())
            .collect();
        ProbabilityMaps { maps }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn map(&self, m: usize) -> &[f64] {
        &self.maps[m]
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Top `k` vertices by score, ties to the lower id, sorted.
pub fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Decodes every map to its top-k set and keeps the densest (first on ties).
pub fn decode_topk(maps: &ProbabilityMaps, inst: &DenseKInstance) -> Result<Vec<usize>> {
    if maps.is_empty() {
        return Err(Error::Empty("probability maps"));
    }
    if maps.maps[0].len() != inst.n() {
        return Err(Error::dims("probability maps", inst.n(), maps.maps[0].len()));
    }
    let mut best: Option<(Vec<usize>, usize)> = None;
    for m in &maps.maps {
        let set = top_k(m, inst.k);
        let d = density(inst.hypergraph(), &set);
        if best.as_ref().is_none_or(|(_, b)| d > *b) {
            best = Some((set, d));
        }
    }
    Ok(best.expect("non-empty maps").0)
}

/// Mean binary cross-entropy of each logit column against `target`, the
/// index of the smallest, and the gradient of that smallest loss.
pub fn hindsight_loss(logits: &DenseMatrix<f64>, target: &[u8]) -> Result<(f64, usize, Vec<f64>, DenseMatrix<f64>)> {
    let (n, maps) = logits.shape();
    if target.len() != n {
        return Err(Error::dims("hindsight target", n, target.len()));
    }
    if n == 0 || maps == 0 {
        return Err(Error::Empty("logit matrix"));
    }
    let per_map: Vec<f64> = (0..maps)
        .map(|m| {
            (0..n)
                .map(|v| {
                    let z = logits[(v, m)];
                    let y = f64::from(target[v]);
                    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
                })
                .sum::<f64>()
                / n as f64
        })
        .collect();
    let best = (0..maps)
        .min_by(|&a, &b| per_map[a].total_cmp(&per_map[b]))
        .expect("at least one map");
    let mut grad = DenseMatrix::zeros(n, maps);
    for v in 0..n {
        grad[(v, best)] = (sigmoid(logits[(v, best)]) - f64::from(target[v])) / n as f64;
    }
    Ok((per_map[best], best, per_map, grad))
}

/// A trained learned solver.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKModel {
    pub params: GcnParams<f64>,
    pub features: FeatureKind,
    pub config: TrainConfig,
    /// Mean hindsight loss over the training set, one entry per epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains a two-layer network with mediator expansion rebuilt for each layer
/// at every step. One optimiser step is taken per sample, visiting samples in
/// a freshly shuffled order every epoch. The output layer has `maps` logit
/// columns and the per-sample loss is the smallest binary cross-entropy among
/// them.
pub fn train_densek(
    samples: &[DenseKSample],
    cfg: &TrainConfig,
    maps: usize,
    features: FeatureKind,
) -> Result<DenseKModel> {
    if samples.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if maps == 0 {
        return Err(Error::InvalidArgument("at least one probability map is required".into()));
    }
    if !(0.0..1.0).contains(&cfg.dropout) {
        return Err(Error::InvalidArgument(format!("dropout {} not in [0, 1)", cfg.dropout)));
    }
    let mut feat_rng = stream(cfg.seed, Stream::Features);
    let inputs: Vec<DenseMatrix<f64>> = samples
        .iter()
        .map(|s| {
            if s.target.len() != s.hypergraph.n() || s.target.iter().any(|&t| t > 1) {
                return Err(Error::InvalidArgument("target must be a 0/1 vector over the vertices".into()));
            }
            Ok(vertex_features(&s.hypergraph, features, &mut feat_rng))
        })
        .collect::<Result<_>>()?;
    let mut params = GcnParams::glorot(features.dim(), cfg.hidden, maps, &mut stream(cfg.seed, Stream::Init));
    let mut opt = OptimizerState::new(&params, cfg.lr, cfg.weight_decay);
    let mut ties = stream(cfg.seed, Stream::Ties);
    let mut drop_rng = stream(cfg.seed, Stream::Dropout);
    let mut shuffle_rng = stream(cfg.seed, Stream::Shuffle);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for &i in &order {
            let (h, x) = (&samples[i].hypergraph, &inputs[i]);
            let prop = layerwise_propagation(h, x, &params, Expansion::Mediators, cfg.self_loops, &mut ties)?;
            let masks = if cfg.dropout > 0.0 {
                Some(DropoutMasks::sample(h.n(), x.cols(), cfg.hidden, cfg.dropout, &mut drop_rng)?)
            } else {
                None
            };
            let (_, cache) = forward_gcn_layers(&prop.first, &prop.second, x, &params, masks.as_ref())?;
            let (loss, _, _, dlogits) = hindsight_loss(cache.logits(), &samples[i].target)?;
            let grads = backward_from_logits(&cache, &dlogits)?;
            drop(cache);
            adam_step(&mut params, &grads, &mut opt);
            if !params.is_finite() {
                return Err(Error::NonFinite("learned densest-k update"));
            }
            total += loss;
        }
        loss_trace.push(total / samples.len() as f64);
    }
    Ok(DenseKModel {
        params,
        features,
        config: cfg.clone(),
        loss_trace,
    })
}

impl DenseKModel {
    pub fn maps(&self) -> usize {
        self.params.theta2.cols()
    }

    /// Probability maps for `h`. `seed` drives tie-breaking and any random features.
    pub fn predict(&self, h: &Hypergraph, seed: u64) -> Result<ProbabilityMaps> {
        let x = vertex_features(h, self.features, &mut stream(seed, Stream::Features));
        let prop = layerwise_propagation(
            h,
            &x,
            &self.params,
            Expansion::Mediators,
            self.config.self_loops,
            &mut stream(seed, Stream::Ties),
        )?;
        let (_, cache) = forward_gcn_layers(&prop.first, &prop.second, &x, &self.params, None)?;
        Ok(ProbabilityMaps::from_logits(cache.logits()))
    }

    pub fn solve(&self, inst: &DenseKInstance, seed: u64) -> Result<Vec<usize>> {
        decode_topk(&self.predict(inst.hypergraph(), seed)?, inst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    MaxDegree,
    RemoveMinDegree,
    BruteForce,
    Learned,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::MaxDegree => "max-degree",
            Solver::RemoveMinDegree => "remove-min-degree",
            Solver::BruteForce => "brute-force",
            Solver::Learned => "learned",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Solver::MaxDegree, Solver::RemoveMinDegree, Solver::BruteForce, Solver::Learned]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown densest-k method '{s}'")))
    }
}

/// Output record of one solver run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseKResult {
    pub method: Solver,
    pub k: usize,
    pub density: usize,
    pub vertices: Vec<usize>,
}

impl DenseKResult {
    pub fn new(method: Solver, inst: &DenseKInstance, vertices: Vec<usize>) -> Self {
        DenseKResult {
            method,
            k: inst.k(),
            density: density(inst.hypergraph(), &vertices),
            vertices,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hg(n: usize, edges: &[&[usize]]) -> Hypergraph {
        Hypergraph::new(n, edges.iter().map(|e| e.to_vec()).collect()).unwrap()
    }

    fn inst(n: usize, edges: &[&[usize]], k: usize) -> DenseKInstance {
        DenseKInstance::new(hg(n, edges), k).unwrap()
    }

    #[test]
    fn instance_bounds() {
        assert!(DenseKInstance::new(hg(3, &[&[0, 1]]), 0).is_err());
        assert!(DenseKInstance::new(hg(3, &[&[0, 1]]), 4).is_err());
        assert_eq!(DenseKInstance::from_fraction(hg(10, &[]), 0.75).unwrap().k(), 7);
        assert!(DenseKInstance::from_fraction(hg(10, &[]), 0.05).is_err());
    }

    #[test]
    fn density_examples() {
        let h = hg(3, &[&[0, 1], &[1, 2], &[0, 1, 2]]);
        assert_eq!(density(&h, &[0, 1, 2]), 3);
        assert_eq!(density(&h, &[]), 0);
        assert_eq!(density(&h, &[0, 1]), 1);
    }

    #[test]
    fn max_degree_examples() {
        let star = inst(4, &[&[0, 1], &[0, 2], &[0, 3]], 1);
        assert_eq!(max_degree(&star), vec![0]);
        let flat = inst(4, &[&[0, 1], &[2, 3]], 2);
        assert_eq!(max_degree(&flat), vec![0, 1]);
    }

    #[test]
    fn remove_min_degree_examples() {
        let i = inst(3, &[&[0, 1], &[0, 1, 2]], 2);
        let w = remove_min_degree(&i);
        assert_eq!(w, vec![0, 1]);
        assert_eq!(density(i.hypergraph(), &w), 1);
        let full = inst(3, &[&[0, 1]], 3);
        assert_eq!(remove_min_degree(&full), vec![0, 1, 2]);
        let empty = inst(4, &[], 1);
        assert_eq!(remove_min_degree(&empty), vec![3]);
    }

    #[test]
    fn brute_force_examples() {
        let i = inst(4, &[&[0, 1], &[2, 3]], 2);
        assert_eq!(brute_force(&i).unwrap(), (vec![0, 1], 1));
        let big = DenseKInstance::new(hg(40, &[]), 20).unwrap();
        assert!(matches!(brute_force(&big), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn binomial_cap() {
        assert_eq!(binomial_capped(10, 5, 1000), Some(252));
        assert_eq!(binomial_capped(5, 5, 10), Some(1));
        assert_eq!(binomial_capped(40, 20, BRUTE_FORCE_LIMIT), None);
    }

    #[test]
    fn generator_examples() {
        let mut rng = stream(5, Stream::Generator);
        let s = gen_sample(40, 30, 0.75, &mut rng).unwrap();
        assert_eq!(s.k(), 30);
        assert_eq!(s.hypergraph.num_edges(), 20);
        assert!(s.hypergraph.edges().iter().all(|e| (2..=10).contains(&e.len())));
        let planted = s.planted();
        for e in s.hypergraph.edges() {
            let inside = e.iter().filter(|&&v| s.target[v] == 1).count();
            assert!(inside == 0 || inside == e.len());
        }
        assert!(density(&s.hypergraph, &planted) <= 20);
        let sure = gen_sample(40, 30, 0.999_999, &mut rng).unwrap();
        assert_eq!(density(&sure.hypergraph, &sure.planted()), 20);
        assert!(gen_sample(40, 30, 1.0, &mut rng).is_err());
        assert!(gen_sample(40, 39, 0.5, &mut rng).is_err());
        assert!(gen_sample(4, 5, 0.5, &mut rng).is_err());
    }

    #[test]
    fn two_hop_reach_examples() {
        let h = hg(6, &[&[0, 1], &[1, 2], &[2, 3]]);
        assert_eq!(two_hop_reach(&h), vec![3, 4, 4, 3, 1, 1]);
    }

    #[test]
    fn decode_examples() {
        let i = inst(5, &[&[0, 1], &[1, 2], &[0, 2], &[3, 4]], 3);
        let planted = ProbabilityMaps::new(vec![vec![1.0, 1.0, 1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(decode_topk(&planted, &i).unwrap(), vec![0, 1, 2]);
        let two = ProbabilityMaps::new(vec![vec![0.0, 0.0, 0.9, 0.9, 0.9], vec![0.8, 0.8, 0.8, 0.1, 0.1]]).unwrap();
        assert_eq!(decode_topk(&two, &i).unwrap(), vec![0, 1, 2]);
        assert!(ProbabilityMaps::new(vec![vec![1.5]]).is_err());
    }

    #[test]
    fn single_map_hindsight_is_plain_bce() {
        let z = DenseMatrix::from_rows(&[[0.3], [-1.2], [2.0]]);
        let t = [1u8, 0, 1];
        let (loss, best, _, _) = hindsight_loss(&z, &t).unwrap();
        let bce: f64 = [(0.3f64, 1.0f64), (-1.2, 0.0), (2.0, 1.0)]
            .iter()
            .map(|&(z, y)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 3.0;
        assert_eq!(best, 0);
        assert!((loss - bce).abs() < 1e-12);
    }

    #[test]
    fn hindsight_gradient_matches_finite_differences() {
        let z = DenseMatrix::from_rows(&[[0.3, 1.0], [-1.2, 0.4], [2.0, -0.5]]);
        let t = [1u8, 0, 1];
        let (_, best, _, grad) = hindsight_loss(&z, &t).unwrap();
        for v in 0..3 {
            for m in 0..2 {
                let mut zp = z.clone();
                let mut zm = z.clone();
                zp[(v, m)] += 1e-6;
                zm[(v, m)] -= 1e-6;
                let fd = (hindsight_loss(&zp, &t).unwrap().0 - hindsight_loss(&zm, &t).unwrap().0) / 2e-6;
                assert!((fd - grad[(v, m)]).abs() < 1e-8);
                if m != best {
                    assert_eq!(grad[(v, m)], 0.0);
                }
            }
        }
    }

    #[test]
    fn confident_correct_maps_have_vanishing_loss() {
        let z = DenseMatrix::filled(6, 2, 40.0);
        let (loss, _, _, _) = hindsight_loss(&z, &[1; 6]).unwrap();
        assert!(loss < 1e-15);
    }

    #[test]
    fn learned_loss_trends_down_on_toy_set() {
        let mut rng = stream(2, Stream::Generator);
        let samples: Vec<_> = (0..20).map(|_| gen_sample(30, 22, 0.75, &mut rng).unwrap()).collect();
        let cfg = TrainConfig {
            epochs: 15,
            dropout: 0.0,
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let model = train_densek(&samples, &cfg, 2, FeatureKind::Structural).unwrap();
        let t = &model.loss_trace;
        let drops = t.windows(2).filter(|w| w[1] < w[0]).count();
        assert!(drops * 2 > t.len() - 1, "{t:?}");
        assert!(t.last().unwrap() < t.first().unwrap());
        assert!(train_densek(&[], &cfg, 2, FeatureKind::Degree).is_err());
    }

    fn arb_instance(max_n: usize) -> impl Strategy<Value = DenseKInstance> {
        (3..=max_n)
            .prop_flat_map(|n| {
                let edge = proptest::collection::btree_set(0..n, 2..=n.min(4));
                (Just(n), proptest::collection::vec(edge, 0..12), 1..=n)
            })
            .prop_map(|(n, edges, k)| {
                let edges = edges.into_iter().map(|e| e.into_iter().collect()).collect();
                DenseKInstance::new(Hypergraph::new(n, edges).unwrap(), k).unwrap()
            })
    }

    proptest! {
        #[test]
        fn greedy_never_beats_optimum(i in arb_instance(9)) {
            let (_, opt) = brute_force(&i).unwrap();
            let md = max_degree(&i);
            let rm = remove_min_degree(&i);
            prop_assert_eq!(md.len(), i.k());
            prop_assert_eq!(rm.len(), i.k());
            prop_assert!(density(i.hypergraph(), &md) <= opt);
            prop_assert!(density(i.hypergraph(), &rm) <= opt);
        }

        #[test]
        fn density_is_monotone(i in arb_instance(9), bits in proptest::collection::vec(any::<bool>(), 9)) {
            let n = i.n();
            let small: Vec<usize> = (0..n).filter(|&v| bits[v] && v % 2 == 0).collect();
            let large: Vec<usize> = (0..n).filter(|&v| bits[v]).collect();
            prop_assert!(density(i.hypergraph(), &small) <= density(i.hypergraph(), &large));
        }

        #[test]
        fn hindsight_is_at_most_any_map(vals in proptest::collection::vec(-5.0f64..5.0, 12), t in proptest::collection::vec(0u8..2, 4)) {
            let z = DenseMatrix::from_vec(4, 3, vals).unwrap();
            let (loss, _, per_map, _) = hindsight_loss(&z, &t).unwrap();
            prop_assert!(per_map.iter().all(|&l| loss <= l));
        }
    }
}
