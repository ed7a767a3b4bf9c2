//! Minimal numerical engine for the two-layer architecture.

mod adam;
mod dense;
pub mod gcn;
pub mod ops;

pub use adam::{adam_step, OptimizerState};
pub use dense::DenseMatrix;
pub use gcn::{
    backward_from_logits, backward_gcn, cross_entropy, forward_gcn, forward_gcn_layers, loss_ce,
    softmax_backward, DropoutMasks, ForwardCache, GcnGrads, GcnParams, Reduction,
};
pub use ops::{dropout, dropout_mask, glorot_init, log_softmax_rows, relu, softmax_rows, spmm};
