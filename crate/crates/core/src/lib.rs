//! Distributional graph signals.
//!
//! A GNN's softmax output assigns each node a distribution over class labels.
//! This crate treats that family of distributions as a graph signal: it
//! measures its smoothness through several Wasserstein-based total
//! variations (with numerical checks of the inequalities between them), its
//! non-uniformity, and trains a small two-layer GCN with a loss that rewards
//! both.
//!
//! * [`graph`]: graphs, Laplacians, spanning trees, clique numbers, SBM sampling
//! * [`spectral`]: eigendecomposition, graph Fourier transform, spectral summaries
//! * [`dist`]: discrete Wasserstein distance, couplings, total variations, bound checks
//! * [`regularizer`]: the smoothness/non-uniformity loss, its gradient, diagnostics
//! * [`gnn`]: data loading, splits, GCN forward/backward, training and evaluation
//! * [`cli`]: the `distsig` command-line front end

pub mod cli;
pub mod dist;
pub mod error;
pub mod exec;
pub mod gnn;
pub mod graph;
pub mod lp;
pub mod regularizer;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
