//! Graph representation learning for profiling websites from audience
//! overlap: graph construction and expansion, engagement features with
//! imputation, Node2Vec / GCN / GraphSAGE embeddings, RBF-SVM classifiers
//! with posterior late fusion, and evaluation metrics.
//!
//! The crate is `no_std` (with `alloc`); file formats, the pipeline and the
//! command line live in the companion `mediaprof` crate.

#![no_std]
// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod classify;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod features;
pub mod gnn;
pub mod graph;
pub mod node2vec;
pub mod rng;
pub mod sparse;
pub mod synth;

pub use error::{Error, Result};
