//! Hypergraph convolutional networks.
//!
//! The crate covers the full pipeline for semi-supervised learning on
//! hypergraphs with spectral expansions:
//!
//! * [`hypercore`]: validated hypergraphs, degrees and size statistics;
//! * [`expand`]: one-edge, mediator and clique expansions plus the symmetric
//!   renormalisation `D̃^{-1/2} Ã D̃^{-1/2}`;
//! * [`tensor`]: dense/sparse kernels and the two-layer GCN with exact
//!   gradients and an adaptive-moment optimiser;
//! * [`models`]: training and evaluation for HyperGCN, 1-HyperGCN,
//!   FastHyperGCN, HGNN, MLP and MLP+HLR;
//! * [`densek`]: greedy and learned densest-k-subhypergraph solvers;
//! * [`dataio`]: on-disk bundles, class-balanced splits and synthetic data.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the default 64-bit precision.

pub mod cli;
pub mod dataio;
pub mod densek;
mod error;
pub mod expand;
pub mod hypercore;
pub mod models;
pub mod rng;
mod scalar;
pub mod tensor;

pub use error::{Error, Result};
pub use expand::{Expansion, SelfLoops};
pub use hypercore::{Hypergraph, SizeCounts};
pub use scalar::{Precision, Scalar};

/// Default working precision.
pub type Real = f64;
pub type Matrix = tensor::DenseMatrix<Real>;
pub type Matrix32 = tensor::DenseMatrix<f32>;
pub type Graph = expand::WeightedGraph<Real>;
pub type Adjacency = expand::NormalizedAdjacency<Real>;
pub type Params = tensor::GcnParams<Real>;
