use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::model::{argmax_rows, GnnModel, Operators, Param};
use super::{GnnConfig, GnnVariant, LabelMask, OptimizerKind, Split};
use crate::embedding::{EmbeddingMatrix, Provenance};
use crate::error::{invalid, Error, Result};
use crate::graph::IndexedGraph;
use crate::rng::rng_for;

const DROPOUT_STREAM: u64 = 0x4452_4f50;

#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        t: i32,
        m: Vec<Array2<f64>>,
        v: Vec<Array2<f64>>,
    },
    Sgd {
        lr: f64,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &[Param]) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => {
                let zeros = || params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect();
                Optimizer::Adam {
                    lr,
                    beta1: 0.9,
                    beta2: 0.999,
                    eps: 1e-8,
                    t: 0,
                    m: zeros(),
                    v: zeros(),
                }
            }
        }
    }

    pub fn step(&mut self, params: &mut [Param], grads: &[Array2<f64>]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    p.value.scaled_add(-*lr, g);
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                t,
                m,
                v,
            } => {
                *t += 1;
                let c1 = 1.0 - libm::pow(*beta1, *t as f64);
                let c2 = 1.0 - libm::pow(*beta2, *t as f64);
                for (((p, g), m), v) in params.iter_mut().zip(grads).zip(m).zip(v) {
                    ndarray::Zip::from(&mut p.value)
                        .and(g)
                        .and(m)
                        .and(v)
                        .for_each(|p, &g, m, v| {
                            *m = *beta1 * *m + (1.0 - *beta1) * g;
                            *v = *beta2 * *v + (1.0 - *beta2) * g * g;
                            *p -= *lr * (*m / c1) / (libm::sqrt(*v / c2) + *eps);
                        });
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training loss (with dropout) of each epoch, before its update.
    pub losses: Vec<f64>,
    pub train_accuracy: f64,
    /// `None` when no node is tagged `Test`.
    pub test_accuracy: Option<f64>,
}

fn accuracy(pred: &[usize], mask: &LabelMask, which: Split) -> Option<f64> {
    let idx = mask.indices(which);
    if idx.is_empty() {
        return None;
    }
    let hits = idx
        .iter()
        .filter(|&&i| mask.labels[i] == Some(pred[i]))
        .count();
    Some(hits as f64 / idx.len() as f64)
}

fn check_setup(
    graph: &IndexedGraph,
    features: &ArrayView2<f64>,
    mask: &LabelMask,
) -> Result<()> {
    mask.validate()?;
    let n = graph.node_count();
    if features.nrows() != n || mask.labels.len() != n {
        return Err(Error::ShapeMismatch(alloc::format!(
            "graph has {n} nodes, features {}, label mask {}",
            features.nrows(),
            mask.labels.len()
        )));
    }
    Ok(())
}

/// Full-batch training on the train-tagged nodes. Embeddings are the last
/// hidden activation of a dropout-free pass with the inference operators.
pub fn train_semi_supervised(
    graph: &IndexedGraph,
    features: ArrayView2<f64>,
    mask: &LabelMask,
    config: &GnnConfig,
) -> Result<(GnnModel, EmbeddingMatrix, TrainReport)> {
    config.validate()?;
    check_setup(graph, &features, mask)?;
    let train = mask.indices(Split::Train);
    if train.is_empty() {
        return Err(invalid!("no train-tagged nodes"));
    }
    for class in 0..mask.n_classes {
        let labeled = mask.labels.contains(&Some(class));
        let trained = train.iter().any(|&i| mask.labels[i] == Some(class));
        if labeled && !trained {
            return Err(invalid!("class {class} has labeled nodes but none tagged train"));
        }
    }

    let mut model = GnnModel::init(
        config.variant,
        features.ncols(),
        config.hidden_dim,
        config.layers,
        mask.n_classes,
        config.seed,
    )?;
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, &model.params);
    let mut losses = Vec::with_capacity(config.epochs);
    let gcn_ops = (config.variant == GnnVariant::Gcn).then(|| Operators::for_epoch(graph, config, 0));
    for epoch in 0..config.epochs {
        let sage_ops;
        let ops = match &gcn_ops {
            Some(ops) => ops,
            None => {
                sage_ops = Operators::for_epoch(graph, config, epoch);
                &sage_ops
            }
        };
        let mut rng = rng_for(config.seed, &[DROPOUT_STREAM, epoch as u64]);
        let (loss, grads, _) = model.loss_and_gradients_with(
            ops,
            features,
            mask,
            config.weight_decay,
            Some((config.dropout, &mut rng)),
        )?;
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch, loss });
        }
        if epoch % 100 == 0 {
            log::debug!("{:?} epoch {epoch}: loss {loss:.5}", config.variant);
        }
        losses.push(loss);
        opt.step(&mut model.params, &grads);
    }
    if !model.is_finite() {
        return Err(Error::Diverged {
            epoch: config.epochs,
            loss: f64::NAN,
        });
    }

    let ops = Operators::for_inference(graph, config);
    let (hidden, logits) = model.forward(&ops, features)?;
    let pred = argmax_rows(&logits);
    let report = TrainReport {
        losses,
        train_accuracy: accuracy(&pred, mask, Split::Train).unwrap_or(0.0),
        test_accuracy: accuracy(&pred, mask, Split::Test),
    };
    let provenance = match config.variant {
        GnnVariant::Gcn => Provenance::Gcn,
        GnnVariant::Sage => Provenance::Sage,
    };
    let embedding = EmbeddingMatrix {
        provenance,
        domains: graph.domains().to_vec(),
        vectors: hidden,
    };
    Ok((model, embedding, report))
}

/// Largest relative error `|a - n| / max(|a|, |n|, 1e-4)` between the
/// analytic gradient and a central difference with step `epsilon`, over
/// every parameter entry. Uses the inference operators and no dropout.
pub fn grad_check(
    model: &GnnModel,
    graph: &IndexedGraph,
    features: ArrayView2<f64>,
    mask: &LabelMask,
    config: &GnnConfig,
    epsilon: f64,
) -> Result<f64> {
    check_setup(graph, &features, mask)?;
    let ops = Operators::for_inference(graph, config);
    let wd = config.weight_decay;
    let (_, grads) = model.loss_and_gradients(&ops, features, mask, wd)?;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for (k, g) in grads.iter().enumerate() {
        let shape = g.raw_dim();
        for (idx, &analytic) in g.indexed_iter() {
            let orig = probe.params[k].value[idx];
            probe.params[k].value[idx] = orig + epsilon;
            let up = probe.loss(&ops, features, mask, wd)?;
            probe.params[k].value[idx] = orig - epsilon;
            let down = probe.loss(&ops, features, mask, wd)?;
            probe.params[k].value[idx] = orig;
            let numeric = (up - down) / (2.0 * epsilon);
            let denom = analytic.abs().max(numeric.abs()).max(1e-4);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        debug_assert_eq!(shape, probe.params[k].value.raw_dim());
    }
    Ok(worst)
}
