//! RBF-SVM classifiers per representation channel, stratified
//! cross-validation with a leakage probe, and posterior late fusion.

mod cv;
mod folds;
mod fusion;
mod svm;

pub use cv::{
    cross_validate, cross_validate_channels, fuse_results, ChannelResult, CvConfig, CvOutcome,
    FusionMode,
};
pub use folds::stratified_folds;
pub use fusion::{fit_fusion_weights, late_fuse, log_loss};
pub use svm::{
    platt_fit, smo_binary, squared_distances, train_svm_rbf, BinarySolution, OvrMachines,
    SvmConfig, SvmFit, SvmModel,
};

use alloc::string::String;
use alloc::vec::Vec;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::embedding::EmbeddingMatrix;
use crate::error::{invalid, Error, Result};

/// Per-column z-scoring fit on training rows. Constant columns (relative
/// spread below 1e-12) keep unit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(invalid!("cannot standardize zero rows"));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = &x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty");
        let scale = ndarray::Zip::from(&var).and(&mean).map_collect(|&v, &m| {
            let sd = libm::sqrt(v);
            if sd > 1e-12 * m.abs().max(1.0) {
                sd
            } else {
                1.0
            }
        });
        Ok(Standardizer { mean, scale })
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "standardizer fit on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        Ok((&x - &self.mean) / &self.scale)
    }
}

/// One representation of every node, rows in a shared domain order.
/// Uncovered rows are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationChannel {
    pub name: String,
    pub domains: Vec<String>,
    pub matrix: Array2<f64>,
    pub coverage: Vec<bool>,
}

impl RepresentationChannel {
    pub fn new(
        name: impl Into<String>,
        domains: Vec<String>,
        matrix: Array2<f64>,
        coverage: Vec<bool>,
    ) -> Result<Self> {
        if matrix.nrows() != domains.len() || coverage.len() != domains.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} domains, {} rows, {} coverage flags",
                domains.len(),
                matrix.nrows(),
                coverage.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("channel values must be finite"));
        }
        let mut matrix = matrix;
        for (mut row, &c) in matrix.rows_mut().into_iter().zip(&coverage) {
            if !c {
                row.fill(0.0);
            }
        }
        Ok(RepresentationChannel {
            name: name.into(),
            domains,
            matrix,
            coverage,
        })
    }

    /// Aligns `rows` (domain, vector) to `order`; absent domains become zero
    /// rows without coverage. Unknown domains are an error naming them.
    pub fn align(
        name: impl Into<String>,
        order: &[String],
        rows: &[(String, Vec<f64>)],
    ) -> Result<Self> {
        let index: alloc::collections::BTreeMap<&str, usize> = order
            .iter()
            .enumerate()
            .map(|(i, d)| (d.as_str(), i))
            .collect();
        let unknown: Vec<&str> = rows
            .iter()
            .map(|(d, _)| d.as_str())
            .filter(|d| !index.contains_key(d))
            .collect();
        if !unknown.is_empty() {
            return Err(invalid!("unknown domains: {}", unknown.join(", ")));
        }
        let dim = rows.first().map_or(0, |(_, v)| v.len());
        if let Some((d, v)) = rows.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "domain {d} has {} values, expected {dim}",
                v.len()
            )));
        }
        let mut matrix = Array2::zeros((order.len(), dim));
        let mut coverage = alloc::vec![false; order.len()];
        for (d, v) in rows {
            let i = index[d.as_str()];
            if coverage[i] {
                return Err(invalid!("domain {d} appears twice"));
            }
            coverage[i] = true;
            matrix.row_mut(i).assign(&ndarray::ArrayView1::from(v.as_slice()));
        }
        RepresentationChannel::new(name, order.to_vec(), matrix, coverage)
    }

    pub fn from_embedding(emb: &EmbeddingMatrix) -> Result<Self> {
        RepresentationChannel::new(
            emb.provenance.name(),
            emb.domains.clone(),
            emb.vectors.clone(),
            alloc::vec![true; emb.domains.len()],
        )
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    /// Rows at `idx`.
    pub fn rows(&self, idx: &[usize]) -> Array2<f64> {
        self.matrix.select(Axis(0), idx)
    }
}
