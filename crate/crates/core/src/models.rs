//! Semi-supervised training and evaluation for the six supported methods.
//!
//! | method          | propagation                                              |
//! |-----------------|----------------------------------------------------------|
//! | `hypergcn`      | mediator expansion, rebuilt every epoch for each layer   |
//! | `one-hypergcn`  | one-edge expansion, rebuilt every epoch for each layer   |
//! | `fast-hypergcn` | mediator expansion from the raw features, built once     |
//! | `hgnn`          | clique expansion, built once                             |
//! | `mlp`           | identity                                                 |
//! | `mlp-hlr`       | identity, plus a Laplacian penalty on the mediator graph |
//!
//! For the per-epoch methods the layer-`l` signal is `H·Θ⁽ˡ⁾`, where `H` is
//! the undropped input of that layer (`X` for the first layer).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{balanced_split, LabeledSplit};
use crate::error::{Error, Result};
use crate::expand::{expand, normalize, Expansion, NormalizedAdjacency, SelfLoops};
use crate::hypercore::{Hypergraph, SizeCounts};
use crate::rng::{stream, Stream, StreamRng};
use crate::scalar::Scalar;
use crate::tensor::{
    adam_step, backward_from_logits, cross_entropy, forward_gcn_layers, relu, softmax_backward, spmm, DenseMatrix,
    DropoutMasks, GcnGrads, GcnParams, OptimizerState, Reduction,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[serde(rename = "hypergcn")]
    HyperGcn,
    #[serde(rename = "one-hypergcn")]
    OneHyperGcn,
    #[serde(rename = "fast-hypergcn")]
    FastHyperGcn,
    Hgnn,
    Mlp,
    MlpHlr,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::HyperGcn,
        Method::OneHyperGcn,
        Method::FastHyperGcn,
        Method::Hgnn,
        Method::Mlp,
        Method::MlpHlr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::HyperGcn => "hypergcn",
            Method::OneHyperGcn => "one-hypergcn",
            Method::FastHyperGcn => "fast-hypergcn",
            Method::Hgnn => "hgnn",
            Method::Mlp => "mlp",
            Method::MlpHlr => "mlp-hlr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub method: Method,
    pub hidden: usize,
    pub dropout: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub hlr_lambda: f64,
    pub seed: u64,
    pub self_loops: SelfLoops,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            method: Method::HyperGcn,
            hidden: 32,
            dropout: 0.5,
            lr: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            hlr_lambda: 1e-3,
            seed: 0,
            self_loops: SelfLoops::Unit,
        }
    }
}

impl TrainConfig {
    pub fn with_method(method: Method) -> Self {
        TrainConfig {
            method,
            ..Self::default()
        }
    }
}

/// Inputs shared by every training run on one dataset.
#[derive(Debug, Clone, Copy)]
pub struct SslData<'a, T> {
    pub hypergraph: &'a Hypergraph,
    pub features: &'a DenseMatrix<T>,
    pub labels: &'a [usize],
    pub classes: usize,
}

/// Propagation matrices for the two layers.
#[derive(Debug, Clone)]
pub struct Propagation<T> {
    pub first: Arc<NormalizedAdjacency<T>>,
    pub second: Arc<NormalizedAdjacency<T>>,
}

impl<T> Propagation<T> {
    fn shared(a: Arc<NormalizedAdjacency<T>>) -> Self {
        Propagation {
            first: a.clone(),
            second: a,
        }
    }
}

/// Expands `h` separately for each layer, using the undropped layer input
/// times that layer's weights as the signal.
pub fn layerwise_propagation<T: Scalar, R: RngCore + ?Sized>(
    h: &Hypergraph,
    x: &DenseMatrix<T>,
    params: &GcnParams<T>,
    rule: Expansion,
    loops: SelfLoops,
    ties: &mut R,
) -> Result<Propagation<T>> {
    let proj1 = x.matmul(&params.theta1)?;
    let first = normalize(&expand(h, rule, Some(&proj1), ties, loops)?)?;
    let hidden = relu(&spmm(&first, &proj1)?);
    let proj2 = hidden.matmul(&params.theta2)?;
    let second = normalize(&expand(h, rule, Some(&proj2), ties, loops)?)?;
    Ok(Propagation {
        first: Arc::new(first),
        second: Arc::new(second),
    })
}

#[derive(Debug)]
enum Schedule<T> {
    Fixed(Arc<NormalizedAdjacency<T>>),
    PerLayer(Expansion),
}

/// The training objective of one method on one labelled split.
///
/// Holds everything that stays fixed across epochs: precomputed graphs for
/// the static methods and the regulariser pairs for `mlp-hlr`.
#[derive(Debug)]
pub struct SslProblem<'a, T: Scalar> {
    data: SslData<'a, T>,
    labelled: &'a [usize],
    self_loops: SelfLoops,
    hlr_lambda: T,
    schedule: Schedule<T>,
    hlr_pairs: Vec<(usize, usize, T)>,
    fixed_pairs: usize,
}

impl<'a, T: Scalar> SslProblem<'a, T> {
    /// `ties` drives tie-breaking for graphs built here (FastHyperGCN and the
    /// HLR graph); per-epoch methods draw from the stream passed to
    /// [`SslProblem::propagation`].
    pub fn new<R: RngCore + ?Sized>(
        data: SslData<'a, T>,
        labelled: &'a [usize],
        cfg: &TrainConfig,
        ties: &mut R,
    ) -> Result<Self> {
        let h = data.hypergraph;
        let n = h.n();
        if data.features.rows() != n {
            return Err(Error::dims("features rows", n, data.features.rows()));
        }
        if data.labels.len() != n {
            return Err(Error::dims("labels", n, data.labels.len()));
        }
        if labelled.is_empty() {
            return Err(Error::Empty("labelled set"));
        }
        let mut hlr_pairs = Vec::new();
        let mut fixed_pairs = 0;
        let schedule = match cfg.method {
            Method::HyperGcn => Schedule::PerLayer(Expansion::Mediators),
            Method::OneHyperGcn => Schedule::PerLayer(Expansion::OneEdge),
            Method::FastHyperGcn | Method::Hgnn => {
                let rule = if cfg.method == Method::Hgnn {
                    Expansion::Clique
                } else {
                    Expansion::Mediators
                };
                let g = expand(h, rule, Some(data.features), ties, cfg.self_loops)?;
                fixed_pairs = g.num_pairs();
                Schedule::Fixed(Arc::new(normalize(&g)?))
            }
            Method::Mlp => Schedule::Fixed(Arc::new(NormalizedAdjacency::identity(n))),
            Method::MlpHlr => {
                let g = expand(h, Expansion::Mediators, Some(data.features), ties, cfg.self_loops)?;
                fixed_pairs = g.num_pairs();
                hlr_pairs = g.pairs().map(|((u, v), w)| (u, v, w)).collect();
                Schedule::Fixed(Arc::new(NormalizedAdjacency::identity(n)))
            }
        };
        Ok(SslProblem {
            data,
            labelled,
            self_loops: cfg.self_loops,
            hlr_lambda: T::lit(cfg.hlr_lambda),
            schedule,
            hlr_pairs,
            fixed_pairs,
        })
    }

    pub fn data(&self) -> &SslData<'a, T> {
        &self.data
    }

    pub fn is_static(&self) -> bool {
        matches!(self.schedule, Schedule::Fixed(_))
    }

    /// Builds (or returns the precomputed) propagation matrices for `params`.
    pub fn propagation<R: RngCore + ?Sized>(&self, params: &GcnParams<T>, ties: &mut R) -> Result<Propagation<T>> {
        match &self.schedule {
            Schedule::Fixed(a) => Ok(Propagation::shared(a.clone())),
            Schedule::PerLayer(rule) => {
                layerwise_propagation(self.data.hypergraph, self.data.features, params, *rule, self.self_loops, ties)
            }
        }
    }

    /// Loss and exact gradient for fixed propagation matrices and dropout masks.
    pub fn objective(
        &self,
        params: &GcnParams<T>,
        prop: &Propagation<T>,
        masks: Option<&DropoutMasks<T>>,
    ) -> Result<(T, GcnGrads<T>)> {
        let (probs, cache) = forward_gcn_layers(&prop.first, &prop.second, self.data.features, params, masks)?;
        let (mut loss, mut dlogits) = cross_entropy(cache.logits(), self.data.labels, self.labelled, Reduction::Mean)?;
        if !self.hlr_pairs.is_empty() && self.hlr_lambda != T::zero() {
            let (reg, dprobs) = self.laplacian_penalty(&probs);
            loss += self.hlr_lambda * reg;
            let mut d = softmax_backward(&probs, &dprobs)?;
            d.scale(self.hlr_lambda);
            dlogits.add_scaled(&d, T::one())?;
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        let grads = backward_from_logits(&cache, &dlogits)?;
        Ok((loss, grads))
    }

    /// Σ w(u,v)·‖Z_u − Z_v‖² over the regulariser pairs, with its gradient.
    fn laplacian_penalty(&self, probs: &DenseMatrix<T>) -> (T, DenseMatrix<T>) {
        let mut reg = T::zero();
        let mut grad = DenseMatrix::zeros(probs.rows(), probs.cols());
        let two = T::lit(2.0);
        for &(u, v, w) in &self.hlr_pairs {
            for j in 0..probs.cols() {
                let diff = probs[(u, j)] - probs[(v, j)];
                reg += w * diff * diff;
                grad[(u, j)] += two * w * diff;
                grad[(v, j)] -= two * w * diff;
            }
        }
        (reg, grad)
    }

    /// Class probabilities without dropout.
    pub fn predict<R: RngCore + ?Sized>(&self, params: &GcnParams<T>, ties: &mut R) -> Result<DenseMatrix<T>> {
        let prop = self.propagation(params, ties)?;
        let (probs, _) = forward_gcn_layers(&prop.first, &prop.second, self.data.features, params, None)?;
        Ok(probs)
    }

    /// Pairs in the graph used for propagation (or regularisation).
    pub fn pairs_for(&self, prop: &Propagation<T>) -> usize {
        match self.schedule {
            Schedule::Fixed(_) => self.fixed_pairs,
            Schedule::PerLayer(_) => (prop.first.nnz() - prop.first.n()) / 2,
        }
    }
}

/// Outcome of one optimiser epoch.
#[derive(Debug, Clone)]
pub struct EpochStep<T> {
    pub loss: T,
    pub propagation: Propagation<T>,
}

/// Stateful epoch-by-epoch trainer.
pub struct SslTrainer<'a, T: Scalar> {
    problem: SslProblem<'a, T>,
    params: GcnParams<T>,
    opt: OptimizerState<T>,
    dropout: f64,
    dropout_rng: StreamRng,
    ties_rng: StreamRng,
    epoch: usize,
}

impl<'a, T: Scalar> SslTrainer<'a, T> {
    pub fn new(data: SslData<'a, T>, labelled: &'a [usize], cfg: &TrainConfig) -> Result<Self> {
        if !(0.0..1.0).contains(&cfg.dropout) {
            return Err(Error::InvalidArgument(format!("dropout {} not in [0, 1)", cfg.dropout)));
        }
        let mut ties_rng = stream(cfg.seed, Stream::Ties);
        let problem = SslProblem::new(data, labelled, cfg, &mut ties_rng)?;
        let mut init_rng = stream(cfg.seed, Stream::Init);
        let params = GcnParams::glorot(data.features.cols(), cfg.hidden, data.classes, &mut init_rng);
        let opt = OptimizerState::new(&params, cfg.lr, cfg.weight_decay);
        Ok(SslTrainer {
            problem,
            params,
            opt,
            dropout: cfg.dropout,
            dropout_rng: stream(cfg.seed, Stream::Dropout),
            ties_rng,
            epoch: 0,
        })
    }

    pub fn step(&mut self) -> Result<EpochStep<T>> {
        let prop = self.problem.propagation(&self.params, &mut self.ties_rng)?;
        let masks = if self.dropout > 0.0 {
            let n = self.problem.data.hypergraph.n();
            Some(DropoutMasks::sample(
                n,
                self.params.theta1.rows(),
                self.params.theta1.cols(),
                self.dropout,
                &mut self.dropout_rng,
            )?)
        } else {
            None
        };
        let (loss, grads) = self.problem.objective(&self.params, &prop, masks.as_ref())?;
        adam_step(&mut self.params, &grads, &mut self.opt);
        if !self.params.is_finite() {
            return Err(Error::NonFinite("parameter update"));
        }
        self.epoch += 1;
        Ok(EpochStep { loss, propagation: prop })
    }

    pub fn predict(&mut self) -> Result<DenseMatrix<T>> {
        self.problem.predict(&self.params, &mut self.ties_rng)
    }

    pub fn params(&self) -> &GcnParams<T> {
        &self.params
    }

    pub fn problem(&self) -> &SslProblem<'a, T> {
        &self.problem
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: Method,
    pub seed: u64,
    pub epochs: usize,
    pub loss_trace: Vec<f64>,
    pub test_error: f64,
    pub seconds_per_epoch: f64,
    pub size_counts: SizeCounts,
    /// Pairs in the expanded graph (last epoch's first layer for per-epoch methods).
    pub graph_pairs: usize,
}

pub fn train_ssl<T: Scalar>(data: SslData<'_, T>, split: &LabeledSplit, cfg: &TrainConfig) -> Result<TrainReport> {
    let mut trainer = SslTrainer::new(data, &split.labelled, cfg)?;
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut graph_pairs = trainer.problem.fixed_pairs;
    let start = Instant::now();
    for _ in 0..cfg.epochs {
        let step = trainer.step()?;
        loss_trace.push(step.loss.as_f64());
        graph_pairs = trainer.problem.pairs_for(&step.propagation);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let probs = trainer.predict()?;
    let test_error = evaluate(&probs, data.labels, split)?;
    Ok(TrainReport {
        method: cfg.method,
        seed: cfg.seed,
        epochs: cfg.epochs,
        loss_trace,
        test_error,
        seconds_per_epoch: if cfg.epochs > 0 { elapsed / cfg.epochs as f64 } else { 0.0 },
        size_counts: data.hypergraph.size_counts(),
        graph_pairs,
    })
}

/// Percentage of misclassified vertices in the evaluation set; the predicted
/// class is the row argmax with ties going to the lowest index.
pub fn evaluate<T: Scalar>(z: &DenseMatrix<T>, labels: &[usize], split: &LabeledSplit) -> Result<f64> {
    if split.evaluation.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut wrong = 0usize;
    for &v in &split.evaluation {
        if v >= z.rows() || v >= labels.len() {
            return Err(Error::InvalidArgument(format!("evaluation vertex {v} out of range")));
        }
        if z.argmax_row(v) != labels[v] {
            wrong += 1;
        }
    }
    Ok(100.0 * wrong as f64 / split.evaluation.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub method: Method,
    pub budget: usize,
    pub trials: usize,
    pub mean: f64,
    /// Sample standard deviation (zero for a single trial).
    pub stdev: f64,
    pub seconds_per_epoch: f64,
    pub reports: Vec<TrainReport>,
}

/// Trains on `trials` independent class-balanced splits. Trial `t` uses seed
/// `cfg.seed + t` for its split, initialisation, dropout and tie-breaking.
/// Trials run in parallel; results are kept in trial order.
pub fn run_trials<T: Scalar>(data: SslData<'_, T>, cfg: &TrainConfig, trials: usize, budget: usize) -> Result<TrialSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let reports: Vec<TrainReport> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = cfg.seed.wrapping_add(t);
            let split = balanced_split(data.labels, data.classes, budget, &mut stream(seed, Stream::Split))?;
            let trial_cfg = TrainConfig { seed, ..cfg.clone() };
            train_ssl(data, &split, &trial_cfg)
        })
        .collect::<Result<_>>()?;
    let errors: Vec<f64> = reports.iter().map(|r| r.test_error).collect();
    let (mean, stdev) = mean_stdev(&errors);
    let seconds_per_epoch = reports.iter().map(|r| r.seconds_per_epoch).sum::<f64>() / trials as f64;
    Ok(TrialSummary {
        method: cfg.method,
        budget,
        trials,
        mean,
        stdev,
        seconds_per_epoch,
        reports,
    })
}

/// Mean and sample standard deviation.
pub fn mean_stdev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
