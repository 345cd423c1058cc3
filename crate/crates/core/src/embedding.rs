use alloc::string::String;
use alloc::vec::Vec;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Which algorithm (or outside source) produced a representation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Node2vec,
    Gcn,
    Sage,
    External(String),
}

impl Provenance {
    pub fn name(&self) -> &str {
        match self {
            Provenance::Node2vec => "node2vec",
            Provenance::Gcn => "gcn",
            Provenance::Sage => "sage",
            Provenance::External(name) => name,
        }
    }
}

/// One dense vector per node, rows aligned with `domains`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub provenance: Provenance,
    pub domains: Vec<String>,
    pub vectors: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().all(|v| v.is_finite())
    }
}
