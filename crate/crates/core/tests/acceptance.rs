//! Acceptance suite. Each test prints a single `criterion N: PASS|FAIL` line
//! (visible with `--nocapture`) before asserting.
//!
//! Criterion 8 needs a user-supplied dataset and is ignored by default; point
//! `HYPERGCN_COCITATION_CORA` at a bundle directory and run with `--ignored`.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hypergcn::dataio::{balanced_split, gen_noisy_ssl, load_bundle, NoisyConfig};
use hypergcn::densek::{
    brute_force, density, gen_sample, max_degree, remove_min_degree, train_densek, DenseKInstance, DenseKSample,
    FeatureKind,
};
use hypergcn::expand::{expand, expand_clique, expand_mediators, Expansion, SelfLoops, WeightedGraph};
use hypergcn::models::{run_trials, train_ssl, Method, SslData, SslProblem, TrainConfig};
use hypergcn::rng::{stream, Stream};
use hypergcn::tensor::{DenseMatrix, DropoutMasks, GcnParams};
use hypergcn::Hypergraph;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

fn verdict(n: u32, ok: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}

fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn random_edge(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    index::sample(rng, n, size).into_vec()
}

fn graphs_match(a: &WeightedGraph<f64>, b: &WeightedGraph<f64>, tol: f64) -> bool {
    a.num_pairs() == b.num_pairs()
        && a.pairs().zip(b.pairs()).all(|((ka, wa), (kb, wb))| ka == kb && (wa - wb).abs() <= tol)
        && a.loops().iter().zip(b.loops()).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn criterion_1_small_hyperedges_make_mediators_equal_clique() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut failures = 0;
    for trial in 0..200 {
        let n = rng.random_range(3..=50);
        let m = rng.random_range(1..=2 * n);
        let edges: Vec<Vec<usize>> = (0..m).map(|_| random_edge(n, rng.random_range(2..=3), &mut rng)).collect();
        let h = Hypergraph::new(n, edges).unwrap();
        let signal = gaussian(n, rng.random_range(1..=4), &mut rng);
        let gm = expand_mediators(&h, &signal, &mut stream(trial, Stream::Ties)).unwrap();
        let gc = expand_clique::<f64>(&h);
        if !graphs_match(&gm, &gc, 1e-12) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures == 0 && secs < 5.0;
    verdict(1, ok, &format!("{failures}/200 mismatches, {secs:.2}s"));
    assert!(ok);
}

#[test]
fn criterion_2_mediator_weights_sum_to_edge_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for trial in 0..200 {
        let s = rng.random_range(2..=20);
        let n = s + rng.random_range(0..5);
        let w = rng.random_range(0.1..5.0);
        let h = Hypergraph::with_weights(n, vec![random_edge(n, s, &mut rng)], vec![w]).unwrap();
        let signal = gaussian(n, 3, &mut rng);
        let g = expand_mediators(&h, &signal, &mut stream(trial, Stream::Ties)).unwrap();
        let expected_pairs = (2 * s - 3).max(1);
        if g.num_pairs() != expected_pairs || (g.total_pair_weight() - w).abs() > 1e-12 {
            failures += 1;
        }
    }
    verdict(2, failures == 0, &format!("{failures}/200 hyperedges off"));
    assert_eq!(failures, 0);
}

/// max|a − b| / max(max|a|, max|b|), zero when both vanish.
fn normwise_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

#[test]
fn criterion_3_gradients_match_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for inst in 0..100u64 {
        let n = rng.random_range(2..=8);
        let (p, hid, q) = (rng.random_range(1..=4), rng.random_range(1..=4), rng.random_range(2..=4));
        let m = rng.random_range(1..=5);
        let edges = (0..m).map(|_| random_edge(n, rng.random_range(2..=n), &mut rng)).collect();
        let h = Hypergraph::new(n, edges).unwrap();
        let x = gaussian(n, p, &mut rng);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..q)).collect();
        let mut labelled: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if labelled.is_empty() {
            labelled.push(0);
        }
        let params = GcnParams {
            theta1: gaussian(p, hid, &mut rng),
            theta2: gaussian(hid, q, &mut rng),
        };
        let masks = if rng.random_bool(0.5) {
            Some(DropoutMasks::sample(n, p, hid, 0.3, &mut rng).unwrap())
        } else {
            None
        };
        let data = SslData {
            hypergraph: &h,
            features: &x,
            labels: &labels,
            classes: q,
        };
        for method in Method::ALL {
            let cfg = TrainConfig {
                method,
                hidden: hid,
                hlr_lambda: rng.random_range(0.1..1.0),
                ..TrainConfig::default()
            };
            let problem = SslProblem::new(data, &labelled, &cfg, &mut stream(inst, Stream::Ties)).unwrap();
            let loss_at = |theta: &GcnParams<f64>| {
                let prop = problem.propagation(theta, &mut stream(inst, Stream::Dropout)).unwrap();
                problem.objective(theta, &prop, masks.as_ref()).unwrap()
            };
            let (_, grads) = loss_at(&params);
            let eps = 1e-6;
            let mut fd = Vec::new();
            let mut analytic = Vec::new();
            for layer in 0..2 {
                let len = if layer == 0 { p * hid } else { hid * q };
                for i in 0..len {
                    let bump = |delta: f64| {
                        let mut t = params.clone();
                        let target = if layer == 0 { &mut t.theta1 } else { &mut t.theta2 };
                        target.as_mut_slice()[i] += delta;
                        loss_at(&t).0
                    };
                    fd.push((bump(eps) - bump(-eps)) / (2.0 * eps));
                    let g = if layer == 0 { &grads.theta1 } else { &grads.theta2 };
                    analytic.push(g.as_slice()[i]);
                }
            }
            let err = normwise_error(&analytic, &fd);
            if err > worst {
                worst = err;
                worst_at = format!("instance {inst}, {method}");
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = worst < 1e-6 && secs < 30.0;
    verdict(3, ok, &format!("worst relative error {worst:.2e} at {worst_at}, {secs:.2}s"));
    assert!(ok);
}

fn random_labels(n: usize, q: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|v| if v < q { v } else { rng.random_range(0..q) }).collect()
}

#[test]
fn criterion_4_linear_pair_counts_and_faster_epochs() {
    let mut counts_ok = true;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for s in 2..=30usize {
        let h = Hypergraph::new(s, vec![(0..s).collect()]).unwrap();
        let signal = gaussian(s, 2, &mut rng);
        let mut ties = stream(s as u64, Stream::Ties);
        let med = expand(&h, Expansion::Mediators, Some(&signal), &mut ties, SelfLoops::Unit).unwrap();
        let one = expand(&h, Expansion::OneEdge, Some(&signal), &mut ties, SelfLoops::Unit).unwrap();
        let clique = expand_clique::<f64>(&h);
        let c = h.size_counts();
        counts_ok &= med.num_pairs() == (2 * s - 3).max(1)
            && one.num_pairs() == 1
            && clique.num_pairs() == s * (s - 1) / 2
            && c.mediator_pairs == (2 * s - 3) as u64
            && c.clique_pairs == (s * (s - 1) / 2) as u64;
    }

    let n = 2000;
    let edges = (0..200).map(|_| random_edge(n, 20, &mut rng)).collect();
    let h = Hypergraph::new(n, edges).unwrap();
    let x = gaussian(n, 16, &mut rng);
    let labels = random_labels(n, 2, &mut rng);
    let data = SslData {
        hypergraph: &h,
        features: &x,
        labels: &labels,
        classes: 2,
    };
    let split = balanced_split(&labels, 2, 100, &mut stream(0, Stream::Split)).unwrap();
    let time = |method| {
        let cfg = TrainConfig {
            epochs: 40,
            ..TrainConfig::with_method(method)
        };
        train_ssl(data, &split, &cfg).unwrap().seconds_per_epoch
    };
    let (mut fast, mut hgnn) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..5 {
        fast = fast.min(time(Method::FastHyperGcn));
        hgnn = hgnn.min(time(Method::Hgnn));
    }
    let ok = counts_ok && fast < hgnn;
    verdict(
        4,
        ok,
        &format!("counts exact: {counts_ok}; s/epoch fast-hypergcn {fast:.2e} vs hgnn {hgnn:.2e}"),
    );
    assert!(ok);
}

/// Peeling recomputed from scratch at every step.
fn naive_peel(h: &Hypergraph, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..h.n()).collect();
    let mut alive: Vec<&[usize]> = h.edges().iter().map(Vec::as_slice).collect();
    while pool.len() > k {
        let deg = |v: usize| alive.iter().filter(|e| e.contains(&v)).count();
        let &victim = pool.iter().min_by_key(|&&v| (deg(v), v)).unwrap();
        alive.retain(|e| !e.contains(&victim));
        pool.retain(|&v| v != victim);
    }
    pool
}

#[test]
fn criterion_5_greedy_solvers_against_exhaustive_search() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    for i in 0..100 {
        let n = rng.random_range(3..=14);
        let m = rng.random_range(0..=2 * n);
        let edges = (0..m).map(|_| random_edge(n, rng.random_range(2..=n.min(5)), &mut rng)).collect();
        let inst = DenseKInstance::new(Hypergraph::new(n, edges).unwrap(), rng.random_range(1..=n)).unwrap();
        let (_, opt) = brute_force(&inst).unwrap();
        let md = density(inst.hypergraph(), &max_degree(&inst));
        let peeled = remove_min_degree(&inst);
        let rm = density(inst.hypergraph(), &peeled);
        if md > opt || rm > opt || peeled != naive_peel(inst.hypergraph(), inst.k()) {
            failures.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 60.0;
    verdict(5, ok, &format!("failing instances {failures:?}, {secs:.2}s"));
    assert!(ok);
}

fn densek_samples(count: usize, rng: &mut impl Rng) -> Vec<DenseKSample> {
    (0..count)
        .map(|_| {
            let n = rng.random_range(100..=300);
            gen_sample(n, 3 * n / 4, 0.75, rng).unwrap()
        })
        .collect()
}

#[test]
fn criterion_6_learned_solver_beats_max_degree() {
    use rayon::prelude::*;
    let start = Instant::now();
    let per_seed: Vec<(f64, f64)> = (0..3u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = stream(seed, Stream::Generator);
            let train = densek_samples(200, &mut rng);
            let test = densek_samples(20, &mut rng);
            let cfg = TrainConfig {
                epochs: 30,
                dropout: 0.0,
                weight_decay: 0.0,
                seed,
                ..TrainConfig::default()
            };
            let model = train_densek(&train, &cfg, 4, FeatureKind::Structural).unwrap();
            let (mut learned, mut greedy) = (0.0, 0.0);
            for (j, s) in test.iter().enumerate() {
                let inst = DenseKInstance::new(s.hypergraph.clone(), s.k()).unwrap();
                learned += density(&s.hypergraph, &model.solve(&inst, j as u64).unwrap()) as f64;
                greedy += density(&s.hypergraph, &max_degree(&inst)) as f64;
            }
            (learned / test.len() as f64, greedy / test.len() as f64)
        })
        .collect();
    let learned = per_seed.iter().map(|r| r.0).sum::<f64>() / 3.0;
    let greedy = per_seed.iter().map(|r| r.1).sum::<f64>() / 3.0;
    let secs = start.elapsed().as_secs_f64();
    let ok = learned > greedy && secs < 900.0;
    verdict(
        6,
        ok,
        &format!("mean density learned {learned:.2} vs max-degree {greedy:.2}; per seed {per_seed:?}; {secs:.0}s"),
    );
    assert!(ok);
}

fn noisy_errors(eta: f64, graphs: u64, budget: usize) -> [f64; 3] {
    use rayon::prelude::*;
    let methods = [Method::Hgnn, Method::FastHyperGcn, Method::HyperGcn];
    let per_graph: Vec<[f64; 3]> = (0..graphs)
        .into_par_iter()
        .map(|g| {
            let bundle = gen_noisy_ssl(&NoisyConfig::with_eta(eta), &mut stream(g, Stream::Generator)).unwrap();
            let data = SslData {
                hypergraph: &bundle.hypergraph,
                features: &bundle.features,
                labels: &bundle.labels,
                classes: 2,
            };
            methods.map(|m| {
                let cfg = TrainConfig {
                    seed: g,
                    ..TrainConfig::with_method(m)
                };
                run_trials(data, &cfg, 1, budget).unwrap().mean
            })
        })
        .collect();
    let mut mean = [0.0; 3];
    for r in &per_graph {
        for i in 0..3 {
            mean[i] += r[i] / graphs as f64;
        }
    }
    mean
}

#[test]
fn criterion_7_noisy_hyperedges_favour_hypergcn() {
    let start = Instant::now();
    let budget = 100;
    let [hgnn, fast, hyper] = noisy_errors(0.5, 10, budget);
    // Informational only: the 9/11 split and the fully balanced 10/10 split.
    let [hgnn_75, fast_75, hyper_75] = noisy_errors(0.75, 10, budget);
    let [hgnn_1, fast_1, hyper_1] = noisy_errors(1.0, 10, budget);
    let secs = start.elapsed().as_secs_f64();
    let ok = fast < hgnn && hyper < hgnn && secs < 1200.0;
    verdict(
        7,
        ok,
        &format!(
            "eta=0.5 error hgnn {hgnn:.2}, fast-hypergcn {fast:.2}, hypergcn {hyper:.2}; \
             eta=0.75 hgnn {hgnn_75:.2}, fast-hypergcn {fast_75:.2}, hypergcn {hyper_75:.2}; \
             eta=1.0 hgnn {hgnn_1:.2}, fast-hypergcn {fast_1:.2}, hypergcn {hyper_1:.2}; {secs:.0}s"
        ),
    );
    assert!(ok);
}

#[test]
#[ignore = "needs a user-supplied co-citation Cora bundle"]
fn criterion_8_cocitation_cora() {
    let Ok(dir) = std::env::var("HYPERGCN_COCITATION_CORA") else {
        println!("criterion 8: SKIPPED (HYPERGCN_COCITATION_CORA not set)");
        return;
    };
    let bundle = load_bundle(Path::new(&dir)).unwrap();
    let data = SslData {
        hypergraph: &bundle.hypergraph,
        features: &bundle.features,
        labels: &bundle.labels,
        classes: bundle.classes,
    };
    let run = |m| run_trials(data, &TrainConfig::with_method(m), 100, 140).unwrap().mean;
    let (hyper, hgnn) = (run(Method::HyperGcn), run(Method::Hgnn));
    let ok = (hyper - 32.37).abs() <= 3.0 && (hgnn - 32.41).abs() <= 3.0;
    verdict(8, ok, &format!("hypergcn {hyper:.2} (target 32.37), hgnn {hgnn:.2} (target 32.41)"));
    assert!(ok);
}

/// Drops every `seconds_per_epoch` field so timing noise is ignored.
fn mask_timing(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove("seconds_per_epoch");
            map.values_mut().for_each(mask_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(mask_timing),
        _ => {}
    }
}

fn run_cli(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_hypergcn"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|line| {
            let mut v: serde_json::Value = serde_json::from_str(line).expect("JSON line");
            mask_timing(&mut v);
            v.to_string()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn criterion_9_cli_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("noisy");
    let inst = dir.path().join("dk");
    let (b, i) = (bundle.to_str().unwrap(), inst.to_str().unwrap());
    let invocations: Vec<Vec<&str>> = vec![
        vec!["gen-noisy", "--eta", "0.6", "--seed", "3", "--n", "200", "--feature-dim", "16", "--out", b],
        vec!["gen-densek", "--n", "40", "--seed", "2", "--out", i],
        vec!["counts", "--data", b],
        vec!["validate", "--data", b],
        vec!["train", "--data", b, "--budget", "20", "--method", "hypergcn", "--epochs", "20", "--seed", "7"],
        vec!["trials", "--data", b, "--budget", "20", "--trials", "3", "--method", "fast-hypergcn", "--epochs", "20", "--seed", "7"],
        vec!["trials", "--data", b, "--budget", "20", "--trials", "2", "--method", "mlp-hlr", "--epochs", "10", "--precision", "f32"],
        vec!["densek", "--data", i, "--method", "remove-min-degree"],
        vec!["densek", "--data", i, "--method", "learned", "--samples", "10", "--epochs", "3", "--maps", "2", "--seed", "1"],
    ];
    let mut mismatched = Vec::new();
    for args in &invocations {
        let first = run_cli(args);
        let second = run_cli(args);
        if first != second || first.is_empty() {
            mismatched.push(args[0]);
        }
    }
    let ok = mismatched.is_empty();
    verdict(9, ok, &format!("{} invocations, mismatched {mismatched:?}", invocations.len()));
    assert!(ok);
}
