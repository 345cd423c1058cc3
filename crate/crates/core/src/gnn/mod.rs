//! Semi-supervised GCN and GraphSAGE with a hand-written backward pass.
//! Node embeddings are the activations of the last hidden layer.

mod layers;
mod model;
mod train;

pub use layers::{gcn_layer_forward, sage_layer_forward, sample_mean_operator, Activation};
pub use model::{GnnModel, Operators, Param};
pub use train::{grad_check, train_semi_supervised, Optimizer, TrainReport};

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::EdgeWeighting;
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GnnVariant {
    Gcn,
    Sage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnnConfig {
    pub variant: GnnVariant,
    /// Hidden graph layers; the logit projection comes on top.
    pub layers: usize,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Coefficient of the `wd / 2 * ||W||^2` penalty on weight matrices.
    pub weight_decay: f64,
    pub dropout: f64,
    /// Neighbors sampled per node at each GraphSAGE layer.
    pub sage_sample_sizes: Vec<usize>,
    pub weighting: EdgeWeighting,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for GnnConfig {
    fn default() -> Self {
        GnnConfig {
            variant: GnnVariant::Gcn,
            layers: 4,
            hidden_dim: 128,
            epochs: 1000,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            sage_sample_sizes: vec![10; 4],
            weighting: EdgeWeighting::Score,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl GnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(invalid!("layers must be >= 1"));
        }
        if self.hidden_dim == 0 {
            return Err(invalid!("hidden_dim must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) {
            return Err(invalid!("learning_rate and weight_decay must be >= 0"));
        }
        if self.variant == GnnVariant::Sage {
            if self.sage_sample_sizes.len() != self.layers {
                return Err(invalid!(
                    "sage_sample_sizes has {} entries for {} layers",
                    self.sage_sample_sizes.len(),
                    self.layers
                ));
            }
            if self.sage_sample_sizes.contains(&0) {
                return Err(invalid!("sage sample sizes must be >= 1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
    Unlabeled,
}

/// Per-node supervision. Only `Train` nodes enter the loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub labels: Vec<Option<usize>>,
    pub split: Vec<Split>,
    pub n_classes: usize,
}

impl LabelMask {
    /// Every labeled node is a training node.
    pub fn all_train(labels: Vec<Option<usize>>, n_classes: usize) -> Result<Self> {
        let split = labels
            .iter()
            .map(|l| if l.is_some() { Split::Train } else { Split::Unlabeled })
            .collect();
        let mask = LabelMask {
            labels,
            split,
            n_classes,
        };
        mask.validate()?;
        Ok(mask)
    }

    /// Per class, `round(train_fraction * count)` labeled nodes (at least
    /// one) go to training and the rest to test.
    pub fn stratified(
        labels: Vec<Option<usize>>,
        n_classes: usize,
        train_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_fraction) {
            return Err(invalid!("train_fraction must be in [0, 1]"));
        }
        let mut split = vec![Split::Unlabeled; labels.len()];
        for class in 0..n_classes {
            let mut members: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == Some(class))
                .collect();
            if members.is_empty() {
                continue;
            }
            members.shuffle(&mut rng_for(seed, &[0x5350_4c54, class as u64]));
            let n_train = (libm::round(train_fraction * members.len() as f64) as usize).max(1);
            for (k, &i) in members.iter().enumerate() {
                split[i] = if k < n_train { Split::Train } else { Split::Test };
            }
        }
        let mask = LabelMask {
            labels,
            split,
            n_classes,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.split.len() {
            return Err(invalid!("labels and split lengths differ"));
        }
        for (i, (l, s)) in self.labels.iter().zip(&self.split).enumerate() {
            match (l, s) {
                (Some(c), _) if *c >= self.n_classes => {
                    return Err(invalid!("node {i} has class {c} >= {}", self.n_classes))
                }
                (None, Split::Train | Split::Test) => {
                    return Err(invalid!("node {i} is in a split but has no label"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn indices(&self, which: Split) -> Vec<usize> {
        (0..self.split.len())
            .filter(|&i| self.split[i] == which)
            .collect()
    }
}
