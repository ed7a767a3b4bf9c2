//! Fixed two-layer graph convolution with hand-derived gradients.
//!
//! ```text
//! logits = Ā₂ · (ReLU(Ā₁ · (X ⊙ M₁) · Θ₁) ⊙ M₂) · Θ₂
//! Z      = softmax_rows(logits)
//! ```
//!
//! `M₁`, `M₂` are optional inverted-dropout masks. Passing the same matrix as
//! `Ā₁` and `Ā₂` gives the standard GCN; the identity gives an MLP.

use std::borrow::Cow;

use rand::Rng;

use crate::error::{Error, Result};
use crate::expand::NormalizedAdjacency;
use crate::scalar::Scalar;
use crate::tensor::ops::{dropout_mask, glorot_init, log_softmax_rows, relu, softmax_rows, spmm};
use crate::tensor::DenseMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams<T> {
    /// Input-to-hidden weights, p × h.
    pub theta1: DenseMatrix<T>,
    /// Hidden-to-output weights, h × q.
    pub theta2: DenseMatrix<T>,
}

impl<T: Scalar> GcnParams<T> {
    pub fn glorot<R: Rng + ?Sized>(inputs: usize, hidden: usize, outputs: usize, rng: &mut R) -> Self {
        GcnParams {
            theta1: glorot_init(inputs, hidden, rng),
            theta2: glorot_init(hidden, outputs, rng),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.is_finite() && self.theta2.is_finite()
    }
}

/// Gradients with the same shapes as [`GcnParams`].
pub type GcnGrads<T> = GcnParams<T>;

#[derive(Debug, Clone)]
pub struct DropoutMasks<T> {
    pub input: DenseMatrix<T>,
    pub hidden: DenseMatrix<T>,
}

impl<T: Scalar> DropoutMasks<T> {
    pub fn sample<R: Rng + ?Sized>(n: usize, inputs: usize, hidden: usize, rate: f64, rng: &mut R) -> Result<Self> {
        Ok(DropoutMasks {
            input: dropout_mask(n, inputs, rate, rng)?,
            hidden: dropout_mask(n, hidden, rate, rng)?,
        })
    }
}

/// Intermediates retained by [`forward_gcn`] for the backward pass.
pub struct ForwardCache<'a, T: Scalar> {
    adj1: &'a NormalizedAdjacency<T>,
    adj2: &'a NormalizedAdjacency<T>,
    params: &'a GcnParams<T>,
    x_in: Cow<'a, DenseMatrix<T>>,
    pre1: DenseMatrix<T>,
    hidden_mask: Option<&'a DenseMatrix<T>>,
    hidden_in: DenseMatrix<T>,
    logits: DenseMatrix<T>,
    probs: DenseMatrix<T>,
}

impl<T: Scalar> ForwardCache<'_, T> {
    pub fn logits(&self) -> &DenseMatrix<T> {
        &self.logits
    }

    pub fn probs(&self) -> &DenseMatrix<T> {
        &self.probs
    }

    /// Hidden representation after ReLU and dropout.
    pub fn hidden(&self) -> &DenseMatrix<T> {
        &self.hidden_in
    }
}

pub fn forward_gcn<'a, T: Scalar>(
    a: &'a NormalizedAdjacency<T>,
    x: &'a DenseMatrix<T>,
    params: &'a GcnParams<T>,
    masks: Option<&'a DropoutMasks<T>>,
) -> Result<(DenseMatrix<T>, ForwardCache<'a, T>)> {
    forward_gcn_layers(a, a, x, params, masks)
}

/// Forward pass with a separate propagation matrix per layer.
pub fn forward_gcn_layers<'a, T: Scalar>(
    adj1: &'a NormalizedAdjacency<T>,
    adj2: &'a NormalizedAdjacency<T>,
    x: &'a DenseMatrix<T>,
    params: &'a GcnParams<T>,
    masks: Option<&'a DropoutMasks<T>>,
) -> Result<(DenseMatrix<T>, ForwardCache<'a, T>)> {
    let n = x.rows();
    if adj1.n() != n || adj2.n() != n {
        return Err(Error::dims("forward_gcn adjacency", n, adj1.n().max(adj2.n())));
    }
    if params.theta1.rows() != x.cols() {
        return Err(Error::dims("forward_gcn theta1 rows", x.cols(), params.theta1.rows()));
    }
    if params.theta2.rows() != params.theta1.cols() {
        return Err(Error::dims("forward_gcn theta2 rows", params.theta1.cols(), params.theta2.rows()));
    }
    let x_in = match masks {
        Some(m) => Cow::Owned(x.hadamard(&m.input)?),
        None => Cow::Borrowed(x),
    };
    let pre1 = spmm(adj1, &x_in.matmul(&params.theta1)?)?;
    let hidden = relu(&pre1);
    let hidden_in = match masks {
        Some(m) => hidden.hadamard(&m.hidden)?,
        None => hidden,
    };
    let logits = spmm(adj2, &hidden_in.matmul(&params.theta2)?)?;
    if !logits.is_finite() {
        return Err(Error::NonFinite("forward_gcn"));
    }
    let probs = softmax_rows(&logits);
    let cache = ForwardCache {
        adj1,
        adj2,
        params,
        x_in,
        pre1,
        hidden_mask: masks.map(|m| &m.hidden),
        hidden_in,
        logits,
        probs: probs.clone(),
    };
    Ok((probs, cache))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    /// Divide the summed loss by the number of labelled vertices.
    #[default]
    Mean,
    Sum,
}

fn check_labels(rows: usize, classes: usize, labels: &[usize], mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::Empty("labelled set"));
    }
    for &i in mask {
        if i >= rows {
            return Err(Error::InvalidArgument(format!("labelled vertex {i} out of range ({rows} rows)")));
        }
        let y = *labels
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("no label for vertex {i}")))?;
        if y >= classes {
            return Err(Error::InvalidArgument(format!("label {y} of vertex {i} >= {classes} classes")));
        }
    }
    Ok(())
}

/// Cross-entropy of the row-softmax of `logits` against `labels` on `mask`,
/// computed in the log domain, together with its gradient w.r.t. the logits.
pub fn cross_entropy<T: Scalar>(
    logits: &DenseMatrix<T>,
    labels: &[usize],
    mask: &[usize],
    reduction: Reduction,
) -> Result<(T, DenseMatrix<T>)> {
    check_labels(logits.rows(), logits.cols(), labels, mask)?;
    let log_probs = log_softmax_rows(logits);
    let scale = match reduction {
        Reduction::Mean => T::from_count(mask.len()).recip(),
        Reduction::Sum => T::one(),
    };
    let mut loss = T::zero();
    let mut grad = DenseMatrix::zeros(logits.rows(), logits.cols());
    for &i in mask {
        let y = labels[i];
        loss -= log_probs[(i, y)];
        for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
            let p = log_probs[(i, j)].exp();
            *g += scale * if j == y { p - T::one() } else { p };
        }
    }
    Ok((loss * scale, grad))
}

/// Mean cross-entropy over the labelled set.
pub fn loss_ce<T: Scalar>(logits: &DenseMatrix<T>, labels: &[usize], mask: &[usize]) -> Result<T> {
    cross_entropy(logits, labels, mask, Reduction::Mean).map(|(l, _)| l)
}

/// Pulls a gradient w.r.t. row-softmax outputs back to the logits.
pub fn softmax_backward<T: Scalar>(probs: &DenseMatrix<T>, dprobs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    probs.check_same_shape("softmax_backward", dprobs)?;
    let mut out = DenseMatrix::zeros(probs.rows(), probs.cols());
    for i in 0..probs.rows() {
        let z = probs.row(i);
        let g = dprobs.row(i);
        let dot: T = z.iter().zip(g).map(|(&a, &b)| a * b).sum();
        for ((o, &zi), &gi) in out.row_mut(i).iter_mut().zip(z).zip(g) {
            *o = zi * (gi - dot);
        }
    }
    Ok(out)
}

/// Gradients of the mean cross-entropy w.r.t. both weight matrices.
pub fn backward_gcn<T: Scalar>(cache: &ForwardCache<'_, T>, labels: &[usize], mask: &[usize]) -> Result<GcnGrads<T>> {
    let (_, dlogits) = cross_entropy(&cache.logits, labels, mask, Reduction::Mean)?;
    backward_from_logits(cache, &dlogits)
}

/// Back-propagates an arbitrary gradient w.r.t. the logits.
pub fn backward_from_logits<T: Scalar>(cache: &ForwardCache<'_, T>, dlogits: &DenseMatrix<T>) -> Result<GcnGrads<T>> {
    cache.logits.check_same_shape("backward_from_logits", dlogits)?;
    // Ā is symmetric, so Āᵀ = Ā.
    let d_proj2 = spmm(cache.adj2, dlogits)?;
    let theta2 = cache.hidden_in.t_matmul(&d_proj2)?;
    let mut d_hidden = d_proj2.matmul_t(&cache.params.theta2)?;
    if let Some(mask) = cache.hidden_mask {
        d_hidden = d_hidden.hadamard(mask)?;
    }
    for (g, &p) in d_hidden.as_mut_slice().iter_mut().zip(cache.pre1.as_slice()) {
        if p <= T::zero() {
            *g = T::zero();
        }
    }
    let d_proj1 = spmm(cache.adj1, &d_hidden)?;
    let theta1 = cache.x_in.t_matmul(&d_proj1)?;
    Ok(GcnGrads { theta1, theta2 })
}
