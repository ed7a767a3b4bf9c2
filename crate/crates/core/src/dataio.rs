//! Dataset bundles on disk, labelled splits and the synthetic noisy-η generator.
//!
//! A bundle is a directory holding
//!
//! * `hyperedges.txt`: one hyperedge per line, space-separated 0-based ids;
//! * `features.csv`: one row of comma-separated reals per vertex, no header;
//! * `labels.txt`: one integer class id per line;
//! * `manifest.json` (optional): `{"name", "n", "p", "q"}`, checked if present.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expand::WeightedGraph;
use crate::hypercore::Hypergraph;
use crate::scalar::Scalar;
use crate::tensor::DenseMatrix;

pub const HYPEREDGES_FILE: &str = "hyperedges.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub name: String,
    pub hypergraph: Hypergraph,
    pub features: DenseMatrix<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl DatasetBundle {
    /// Checks the cross-field invariants: matching `n`, labels in range and
    /// every class present.
    pub fn new(
        name: impl Into<String>,
        hypergraph: Hypergraph,
        features: DenseMatrix<f64>,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        let n = hypergraph.n();
        if features.rows() != n {
            return Err(Error::dims("bundle features", n, features.rows()));
        }
        if labels.len() != n {
            return Err(Error::dims("bundle labels", n, labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidArgument(format!("label {bad} outside 0..{classes}")));
        }
        let counts = class_counts(&labels, classes);
        if let Some(c) = counts.iter().position(|&k| k == 0) {
            return Err(Error::InsufficientClass { class: c, have: 0, need: 1 });
        }
        Ok(DatasetBundle {
            name: name.into(),
            hypergraph,
            features,
            labels,
            classes,
        })
    }

    pub fn n(&self) -> usize {
        self.hypergraph.n()
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            name: self.name.clone(),
            n: self.n(),
            p: self.features.cols(),
            q: self.classes,
        }
    }

    /// Features converted to the requested precision.
    pub fn features_as<T: Scalar>(&self) -> DenseMatrix<T> {
        self.features.cast()
    }
}

pub fn class_counts(labels: &[usize], classes: usize) -> Vec<usize> {
    let mut counts = vec![0; classes];
    for &l in labels {
        if l < classes {
            counts[l] += 1;
        }
    }
    counts
}

/// A non-fatal problem found while loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadWarning {
    pub line: usize,
    pub msg: String,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Parses a hyperedge list. Hyperedges with fewer than two distinct vertices
/// are dropped and reported as warnings. When `n` is `None` it is taken as
/// one more than the largest id.
pub fn parse_hyperedges(path: &Path, text: &str, n: Option<usize>) -> Result<(Hypergraph, Vec<LoadWarning>)> {
    let mut edges = Vec::new();
    let mut warnings = Vec::new();
    let mut max_id = None::<usize>;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let mut edge = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| parse_err(path, lineno, format!("invalid vertex id '{tok}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(limit) = n {
            if let Some(&v) = edge.iter().find(|&&v| v >= limit) {
                return Err(parse_err(path, lineno, format!("vertex {v} out of range for n = {limit}")));
            }
        }
        edge.sort_unstable();
        edge.dedup();
        if edge.len() < 2 {
            warnings.push(LoadWarning {
                line: lineno,
                msg: format!("dropped hyperedge with {} distinct vertices", edge.len()),
            });
            continue;
        }
        max_id = max_id.max(edge.last().copied());
        edges.push(edge);
    }
    let n = n.unwrap_or_else(|| max_id.map_or(0, |m| m + 1));
    let weights = vec![1.0; edges.len()];
    let h = Hypergraph::with_weights(n, edges, weights)?;
    Ok((h, warnings))
}

pub fn load_hypergraph(path: &Path, n: Option<usize>) -> Result<(Hypergraph, Vec<LoadWarning>)> {
    let text = read(path)?;
    let (h, warnings) = parse_hyperedges(path, &text, n)?;
    for w in &warnings {
        log::warn!("{}:{}: {}", path.display(), w.line, w.msg);
    }
    Ok((h, warnings))
}

pub fn parse_features(path: &Path, text: &str) -> Result<DenseMatrix<f64>> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                match tok.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(parse_err(path, lineno, format!("invalid feature value '{tok}'"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(parse_err(path, lineno, format!("expected {c} columns, found {}", row.len())));
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), data)
}

pub fn parse_labels(path: &Path, text: &str, classes: Option<usize>) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let tok = line.trim();
            let l = tok
                .parse::<usize>()
                .map_err(|_| parse_err(path, i + 1, format!("invalid label '{tok}'")))?;
            match classes {
                Some(q) if l >= q => Err(parse_err(path, i + 1, format!("label {l} outside 0..{q}"))),
                _ => Ok(l),
            }
        })
        .collect()
}

fn load_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(None);
    }
    let text = read(&path)?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Data { path, msg: e.to_string() })
}

/// Loads a bundle directory, returning the loader warnings alongside.
pub fn load_bundle_verbose(dir: &Path) -> Result<(DatasetBundle, Vec<LoadWarning>)> {
    let manifest = load_manifest(dir)?;
    let fpath = dir.join(FEATURES_FILE);
    let features = parse_features(&fpath, &read(&fpath)?)?;
    let n = features.rows();
    let data_err = |path: PathBuf, msg: String| Error::Data { path, msg };
    if let Some(m) = &manifest {
        if m.n != n || m.p != features.cols() {
            return Err(data_err(
                dir.join(MANIFEST_FILE),
                format!("manifest says n={}, p={} but features are {n}x{}", m.n, m.p, features.cols()),
            ));
        }
    }
    let lpath = dir.join(LABELS_FILE);
    let labels = parse_labels(&lpath, &read(&lpath)?, manifest.as_ref().map(|m| m.q))?;
    if labels.len() != n {
        return Err(data_err(lpath, format!("{} labels for {n} feature rows", labels.len())));
    }
    let hpath = dir.join(HYPEREDGES_FILE);
    let (hypergraph, warnings) = load_hypergraph(&hpath, Some(n))?;
    let classes = match &manifest {
        Some(m) => m.q,
        None => labels.iter().max().map_or(0, |m| m + 1),
    };
    let name = manifest.map(|m| m.name).unwrap_or_else(|| {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let bundle = DatasetBundle::new(name, hypergraph, features, labels, classes)
        .map_err(|e| data_err(dir.to_path_buf(), e.to_string()))?;
    Ok((bundle, warnings))
}

pub fn load_bundle(dir: &Path) -> Result<DatasetBundle> {
    load_bundle_verbose(dir).map(|(b, _)| b)
}

fn write_file(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_hyperedges(path: &Path, h: &Hypergraph) -> Result<()> {
    write_file(path, |w| {
        for e in h.edges() {
            let line: Vec<String> = e.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    })
}

/// Writes the bundle files and a manifest. Real values use the shortest
/// round-tripping representation, so loading gives back identical numbers.
pub fn save_bundle(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_hyperedges(&dir.join(HYPEREDGES_FILE), &bundle.hypergraph)?;
    write_file(&dir.join(FEATURES_FILE), |w| {
        for row in bundle.features.row_iter() {
            let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    })?;
    write_file(&dir.join(LABELS_FILE), |w| {
        for l in &bundle.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })?;
    let manifest = serde_json::to_string_pretty(&bundle.manifest())?;
    let mpath = dir.join(MANIFEST_FILE);
    fs::write(&mpath, manifest + "\n").map_err(|e| Error::io(mpath, e))
}

/// Writes an expanded graph as `u v weight` lines (pairs, then `v v loop`).
pub fn write_graph<T: Scalar>(path: &Path, g: &WeightedGraph<T>) -> Result<()> {
    write_file(path, |w| {
        for ((u, v), wt) in g.pairs() {
            writeln!(w, "{u} {v} {wt}")?;
        }
        for (v, l) in g.loops().iter().enumerate() {
            writeln!(w, "{v} {v} {l}")?;
        }
        Ok(())
    })
}

/// Labelled vertices and the disjoint evaluation set, both sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSplit {
    pub labelled: Vec<usize>,
    pub evaluation: Vec<usize>,
}

/// Samples `budget / classes` labelled vertices uniformly from every class;
/// everything else becomes the evaluation set.
pub fn balanced_split<R: Rng + ?Sized>(
    labels: &[usize],
    classes: usize,
    budget: usize,
    rng: &mut R,
) -> Result<LabeledSplit> {
    if classes == 0 || !budget.is_multiple_of(classes) {
        return Err(Error::InvalidArgument(format!(
            "label budget {budget} is not divisible by {classes} classes"
        )));
    }
    let per_class = budget / classes;
    let mut members = vec![Vec::new(); classes];
    for (v, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::InvalidArgument(format!("label {l} outside 0..{classes}")));
        }
        members[l].push(v);
    }
    let mut chosen = vec![false; labels.len()];
    for (class, vs) in members.iter_mut().enumerate() {
        if vs.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                have: vs.len(),
                need: per_class,
            });
        }
        let (picked, _) = vs.partial_shuffle(rng, per_class);
        for &v in picked.iter() {
            chosen[v] = true;
        }
    }
    let (labelled, evaluation): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&v| chosen[v]);
    Ok(LabeledSplit { labelled, evaluation })
}

/// Parameters of the two-class synthetic generator with pure and noisy hyperedges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisyConfig {
    pub n: usize,
    pub pure: usize,
    pub noisy: usize,
    pub pure_size: usize,
    pub noisy_size: usize,
    /// Minority-to-majority class ratio inside each noisy hyperedge.
    pub eta: f64,
    pub feature_dim: usize,
}

impl Default for NoisyConfig {
    fn default() -> Self {
        NoisyConfig {
            n: 1000,
            pure: 100,
            noisy: 400,
            pure_size: 5,
            noisy_size: 20,
            eta: 0.5,
            feature_dim: 256,
        }
    }
}

impl NoisyConfig {
    pub fn with_eta(eta: f64) -> Self {
        NoisyConfig {
            eta,
            ..Self::default()
        }
    }

    /// `(minority, majority)` vertex counts in a noisy hyperedge.
    pub fn noisy_split(&self) -> (usize, usize) {
        let s = self.noisy_size as f64;
        let minority = (s * self.eta / (1.0 + self.eta)).round() as usize;
        (minority, self.noisy_size - minority)
    }
}

/// Generates a two-class bundle: classes are a random equal halving of the
/// vertices, pure hyperedges lie inside one random class, and noisy hyperedges
/// mix the classes in the ratio given by `eta`, with a random majority class.
/// Vertices are sampled without replacement within a hyperedge and
/// independently across hyperedges. Features are i.i.d. standard normal.
pub fn gen_noisy_ssl<R: Rng + ?Sized>(cfg: &NoisyConfig, rng: &mut R) -> Result<DatasetBundle> {
    if !(cfg.eta > 0.0 && cfg.eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta {} not in (0, 1]", cfg.eta)));
    }
    if cfg.n < 2 || !cfg.n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("n = {} must be even and at least 2", cfg.n)));
    }
    let half = cfg.n / 2;
    let (minority, majority) = cfg.noisy_split();
    if cfg.pure_size < 2 || cfg.noisy_size < 2 || cfg.pure_size > half || majority > half {
        return Err(Error::InvalidArgument("hyperedge sizes incompatible with class sizes".into()));
    }
    let mut order: Vec<usize> = (0..cfg.n).collect();
    order.shuffle(rng);
    let mut labels = vec![0usize; cfg.n];
    for &v in &order[half..] {
        labels[v] = 1;
    }
    let mut class_members = [order[..half].to_vec(), order[half..].to_vec()];
    for c in &mut class_members {
        c.sort_unstable();
    }
    let mut edges = Vec::with_capacity(cfg.pure + cfg.noisy);
    for _ in 0..cfg.pure {
        let c = rng.random_range(0..2usize);
        edges.push(class_members[c].choose_multiple(rng, cfg.pure_size).copied().collect::<Vec<_>>());
    }
    for _ in 0..cfg.noisy {
        let major = rng.random_range(0..2usize);
        let mut e: Vec<usize> = class_members[major].choose_multiple(rng, majority).copied().collect();
        e.extend(class_members[1 - major].choose_multiple(rng, minority).copied());
        edges.push(e);
    }
    let data = (0..cfg.n * cfg.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
    let features = DenseMatrix::from_vec(cfg.n, cfg.feature_dim, data)?;
    let hypergraph = Hypergraph::new(cfg.n, edges)?;
    DatasetBundle::new(format!("noisy-eta-{}", cfg.eta), hypergraph, features, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn toy_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(HYPEREDGES_FILE), "0 1\n1 2\n").unwrap();
        fs::write(dir.path().join(FEATURES_FILE), "1,0\n0,1\n0.5,0.5\n").unwrap();
        fs::write(dir.path().join(LABELS_FILE), "0\n1\n1\n").unwrap();
        dir
    }

    #[test]
    fn loads_toy_bundle() {
        let dir = toy_dir();
        let b = load_bundle(dir.path()).unwrap();
        assert_eq!(b.n(), 3);
        assert_eq!(b.classes, 2);
        assert_eq!(b.hypergraph.edges(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(b.features[(2, 1)], 0.5);
    }

    #[test]
    fn singleton_hyperedges_are_dropped_with_warning() {
        let dir = toy_dir();
        fs::write(dir.path().join(HYPEREDGES_FILE), "0 1\n2\n1 1\n1 2\n").unwrap();
        let (b, warnings) = load_bundle_verbose(dir.path()).unwrap();
        assert_eq!(b.hypergraph.num_edges(), 2);
        assert_eq!(warnings.iter().map(|w| w.line).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn label_out_of_range_reports_line() {
        let dir = toy_dir();
        let manifest = r#"{"name":"toy","n":3,"p":2,"q":2}"#;
        fs::write(dir.path().join(MANIFEST_FILE), manifest).unwrap();
        fs::write(dir.path().join(LABELS_FILE), "0\n2\n1\n").unwrap();
        match load_bundle(dir.path()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let p = Path::new("x");
        let line_of = |e: Error| match e {
            Error::Parse { line, .. } => line,
            e => panic!("unexpected {e}"),
        };
        assert_eq!(line_of(parse_hyperedges(p, "0 1\n0 x\n", None).unwrap_err()), 2);
        assert_eq!(line_of(parse_hyperedges(p, "0 1\n0 5\n", Some(3)).unwrap_err()), 2);
        assert_eq!(line_of(parse_features(p, "1,2\n3\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_features(p, "1,nan\n").unwrap_err()), 1);
        assert_eq!(line_of(parse_labels(p, "0\n\n", None).unwrap_err()), 2);
    }

    #[test]
    fn inconsistent_sizes_are_data_errors() {
        let dir = toy_dir();
        fs::write(dir.path().join(LABELS_FILE), "0\n1\n").unwrap();
        assert!(load_bundle(dir.path()).unwrap_err().is_data_error());
        let dir = toy_dir();
        fs::write(dir.path().join(MANIFEST_FILE), r#"{"name":"t","n":4,"p":2,"q":2}"#).unwrap();
        assert!(load_bundle(dir.path()).unwrap_err().is_data_error());
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = stream(3, Stream::Generator);
        let cfg = NoisyConfig {
            n: 40,
            pure: 5,
            noisy: 6,
            pure_size: 3,
            noisy_size: 6,
            eta: 0.5,
            feature_dim: 4,
        };
        let b = gen_noisy_ssl(&cfg, &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap(), b);
    }

    #[test]
    fn balanced_split_examples() {
        let labels = [0, 1, 0, 1, 0, 1, 1];
        let mut rng = stream(1, Stream::Split);
        let s = balanced_split(&labels, 2, 4, &mut rng).unwrap();
        assert_eq!(s.labelled.len(), 4);
        assert_eq!(class_counts(&s.labelled.iter().map(|&v| labels[v]).collect::<Vec<_>>(), 2), vec![2, 2]);
        let mut all: Vec<usize> = s.labelled.iter().chain(&s.evaluation).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert!(balanced_split(&labels, 2, 5, &mut rng).is_err());
        assert!(matches!(
            balanced_split(&labels, 2, 8, &mut rng),
            Err(Error::InsufficientClass { class: 0, have: 3, need: 4 })
        ));
    }

    #[test]
    fn seven_class_budget_gives_twenty_per_class() {
        let labels: Vec<usize> = (0..2708).map(|v| v % 7).collect();
        let s = balanced_split(&labels, 7, 140, &mut stream(0, Stream::Split)).unwrap();
        let per = class_counts(&s.labelled.iter().map(|&v| labels[v]).collect::<Vec<_>>(), 7);
        assert_eq!(per, vec![20; 7]);
        assert!((140.0 / 2708.0 - 0.052f64).abs() < 5e-4);
    }

    #[test]
    fn noisy_split_rounding() {
        assert_eq!(NoisyConfig::with_eta(1.0).noisy_split(), (10, 10));
        assert_eq!(NoisyConfig::with_eta(0.75).noisy_split(), (9, 11));
        assert_eq!(NoisyConfig::with_eta(0.5).noisy_split(), (7, 13));
    }

    #[test]
    fn noisy_generator_structure() {
        for eta in [0.5, 0.75, 1.0] {
            let cfg = NoisyConfig::with_eta(eta);
            let b = gen_noisy_ssl(&cfg, &mut stream(11, Stream::Generator)).unwrap();
            assert_eq!(class_counts(&b.labels, 2), vec![500, 500]);
            assert_eq!(b.hypergraph.num_edges(), 500);
            assert_eq!(b.features.shape(), (1000, 256));
            let (minority, majority) = cfg.noisy_split();
            for (i, e) in b.hypergraph.edges().iter().enumerate() {
                let ones = e.iter().filter(|&&v| b.labels[v] == 1).count();
                if i < cfg.pure {
                    assert_eq!(e.len(), 5);
                    assert!(ones == 0 || ones == 5);
                } else {
                    assert_eq!(e.len(), 20);
                    assert!(ones == minority || ones == majority);
                }
            }
        }
        assert!(gen_noisy_ssl(&NoisyConfig::with_eta(0.0), &mut stream(0, Stream::Generator)).is_err());
        assert!(gen_noisy_ssl(&NoisyConfig::with_eta(1.5), &mut stream(0, Stream::Generator)).is_err());
    }

    #[test]
    fn graph_writer_lists_pairs_then_loops() {
        let mut g = WeightedGraph::<f64>::new(2);
        g.add_pair(0, 1, 0.5);
        g.set_loop(0, 1.0);
        g.set_loop(1, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.txt");
        write_graph(&p, &g).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "0 1 0.5\n0 0 1\n1 1 1\n");
    }
}
