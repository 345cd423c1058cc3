use alloc::vec;
use alloc::vec::Vec;

use ndarray::Array2;
use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{Node2VecConfig, WalkCorpus};
use crate::error::{invalid, Error, Result};
use crate::rng::rng_for;

const INIT_STREAM: u64 = 0x494e_4954;
const TRAIN_STREAM: u64 = 0x5452_4149;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipGramReport {
    /// Mean per-pair negative-sampling loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Nodes that never acted as a center word; their vectors are still the
    /// random initialization.
    pub untrained: Vec<usize>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

/// Negative-sampling loss `-log s(u_o.v) - sum_k log s(-u_k.v)` and its
/// gradients with respect to the center vector, the context vector, and
/// each negative vector.
pub fn sgns_loss_and_grad(
    center: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
) -> (f64, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let pos = dot(context, center);
    let mut loss = -log_sigmoid(pos);
    let g_pos = sigmoid(pos) - 1.0;
    let mut d_center: Vec<f64> = context.iter().map(|u| g_pos * u).collect();
    let d_context: Vec<f64> = center.iter().map(|v| g_pos * v).collect();
    let mut d_neg = Vec::with_capacity(negatives.len());
    for u in negatives {
        let s = dot(u, center);
        loss -= log_sigmoid(-s);
        let g = sigmoid(s);
        axpy(&mut d_center, g, u);
        d_neg.push(center.iter().map(|v| g * v).collect());
    }
    (loss, d_center, d_context, d_neg)
}

/// One SGD step on a `(center, context, negatives)` sample, in place on the
/// row-major `input` / `output` tables. Returns the loss before the step.
#[allow(clippy::too_many_arguments)]
pub fn sgns_pair_update(
    input: &mut [f64],
    output: &mut [f64],
    dim: usize,
    center: usize,
    context: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut [f64],
) -> f64 {
    let v = &input[center * dim..(center + 1) * dim];
    let grad_acc = &mut scratch[..dim];
    grad_acc.fill(0.0);
    let mut loss = 0.0;
    for (k, &target) in core::iter::once(&context).chain(negatives).enumerate() {
        let label = if k == 0 { 1.0 } else { 0.0 };
        let u = &mut output[target * dim..(target + 1) * dim];
        let f = dot(v, u);
        loss -= if k == 0 {
            log_sigmoid(f)
        } else {
            log_sigmoid(-f)
        };
        let g = (label - sigmoid(f)) * lr;
        axpy(grad_acc, g, u);
        axpy(u, g, v);
    }
    axpy(&mut input[center * dim..(center + 1) * dim], 1.0, grad_acc);
    loss
}

/// Skip-gram with negative sampling over the walk corpus. Dynamic windows
/// of size `1..=window`, noise distribution `count^0.75`, and a learning
/// rate decaying linearly over all tokens of all epochs. Single-threaded and
/// deterministic given `config.seed`.
pub fn train_skipgram(
    corpus: &WalkCorpus,
    n_nodes: usize,
    config: &Node2VecConfig,
) -> Result<(Array2<f64>, SkipGramReport)> {
    config.validate()?;
    let tokens = corpus.token_count();
    if tokens == 0 {
        return Err(invalid!("walk corpus is empty"));
    }
    let dim = config.dim;
    let mut counts = vec![0usize; n_nodes];
    for &t in corpus.walks.iter().flatten() {
        let t = t as usize;
        if t >= n_nodes {
            return Err(invalid!("walk visits node {t} but graph has {n_nodes}"));
        }
        counts[t] += 1;
    }
    let noise = WeightedAliasIndex::new(
        counts
            .iter()
            .map(|&c| libm::pow(c as f64, 0.75))
            .collect::<Vec<_>>(),
    )
    .map_err(|e| invalid!("noise distribution: {e}"))?;

    let mut init_rng = rng_for(config.seed, &[INIT_STREAM]);
    let mut input: Vec<f64> = (0..n_nodes * dim)
        .map(|_| (init_rng.random::<f64>() - 0.5) / dim as f64)
        .collect();
    let mut output = vec![0.0; n_nodes * dim];
    let mut scratch = vec![0.0; dim];
    let mut negs = Vec::with_capacity(config.negatives);
    let mut trained = vec![false; n_nodes];
    let mut rng = rng_for(config.seed, &[TRAIN_STREAM]);

    let total = (tokens * config.epochs) as f64 + 1.0;
    let mut processed = 0usize;
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for walk in &corpus.walks {
            for pos in 0..walk.len() {
                let lr = config.learning_rate
                    * (1.0 - processed as f64 / total).max(config.min_learning_rate_fraction);
                processed += 1;
                let reach = config.window - rng.random_range(0..config.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(walk.len() - 1);
                let center = walk[pos] as usize;
                for (offset, &token) in walk[lo..=hi].iter().enumerate() {
                    if lo + offset == pos {
                        continue;
                    }
                    let context = token as usize;
                    negs.clear();
                    for _ in 0..config.negatives {
                        let t = noise.sample(&mut rng);
                        if t != context {
                            negs.push(t);
                        }
                    }
                    loss_sum += sgns_pair_update(
                        &mut input,
                        &mut output,
                        dim,
                        center,
                        context,
                        &negs,
                        lr,
                        &mut scratch,
                    );
                    pairs += 1;
                    trained[center] = true;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::Diverged { epoch, loss: mean });
        }
        log::debug!("skip-gram epoch {epoch}: loss {mean:.5}");
        epoch_losses.push(mean);
    }
    let untrained: Vec<usize> = (0..n_nodes).filter(|&v| !trained[v]).collect();
    if !untrained.is_empty() {
        log::warn!("{} nodes kept their initial vectors", untrained.len());
    }
    let vectors = Array2::from_shape_vec((n_nodes, dim), input)
        .expect("buffer sized n_nodes * dim");
    Ok((
        vectors,
        SkipGramReport {
            epoch_losses,
            untrained,
        },
    ))
}
