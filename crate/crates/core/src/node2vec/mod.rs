//! Node2Vec: second-order biased random walks fed to a skip-gram model with
//! negative sampling.

mod skipgram;
mod walk;

pub use skipgram::{sgns_loss_and_grad, sgns_pair_update, train_skipgram, SkipGramReport};
pub use walk::{sample_walks, transition_weights, WalkCorpus, WalkSampler};

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingMatrix, Provenance};
use crate::error::{invalid, Result};
use crate::graph::{EdgeWeighting, IndexedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Node2VecConfig {
    pub num_walks: usize,
    pub walk_length: usize,
    pub dim: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Start of the linearly decaying learning rate.
    pub learning_rate: f64,
    /// Floor of the decay, as a fraction of `learning_rate`.
    pub min_learning_rate_fraction: f64,
    pub weighting: EdgeWeighting,
    pub seed: u64,
}

impl Default for Node2VecConfig {
    fn default() -> Self {
        Node2VecConfig {
            num_walks: 10,
            walk_length: 100,
            dim: 512,
            p: 0.5,
            q: 2.0,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate_fraction: 1e-4,
            weighting: EdgeWeighting::Score,
            seed: 0,
        }
    }
}

impl Node2VecConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.q > 0.0) {
            return Err(invalid!("p and q must be positive (p = {}, q = {})", self.p, self.q));
        }
        if self.dim == 0 {
            return Err(invalid!("dim must be >= 1"));
        }
        if self.walk_length < 2 {
            return Err(invalid!("walk_length must be >= 2"));
        }
        if self.window == 0 {
            return Err(invalid!("window must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid!("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Walks, trains, and wraps the input vectors as an embedding matrix.
pub fn node2vec(
    graph: &IndexedGraph,
    config: &Node2VecConfig,
) -> Result<(EmbeddingMatrix, SkipGramReport)> {
    config.validate()?;
    let corpus = sample_walks(graph, config)?;
    let (vectors, report) = train_skipgram(&corpus, graph.node_count(), config)?;
    Ok((
        EmbeddingMatrix {
            provenance: Provenance::Node2vec,
            domains: graph.domains().to_vec(),
            vectors,
        },
        report,
    ))
}
