use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;

use super::layers::check_linear;
use super::{GnnConfig, GnnVariant, LabelMask, Split};
use crate::error::{invalid, Error, Result};
use crate::graph::IndexedGraph;
use crate::rng::{rng_for, Rng};
use crate::sparse::CsrMatrix;

const INIT_STREAM: u64 = 0x494e_4954;
const SAGE_TRAIN_STREAM: u64 = 0x5341_4745;
const SAGE_INFER_STREAM: u64 = 0x494e_4652;

/// A named parameter tensor. Biases are `1 x k` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Array2<f64>,
    /// Whether the L2 penalty applies (weights yes, biases no).
    pub decay: bool,
}

/// Propagation operators for one forward pass: the normalized adjacency
/// shared by every GCN layer, or one sampled mean operator per SAGE layer.
#[derive(Debug, Clone, PartialEq)]
pub enum Operators {
    Gcn(CsrMatrix),
    Sage(Vec<CsrMatrix>),
}

impl Operators {
    fn sampled(graph: &IndexedGraph, config: &GnnConfig, path: &[u64]) -> Self {
        Operators::Sage(
            config
                .sage_sample_sizes
                .iter()
                .enumerate()
                .map(|(l, &k)| {
                    let mut full = path.to_vec();
                    full.push(l as u64);
                    super::sample_mean_operator(graph, k, &mut rng_for(config.seed, &full))
                })
                .collect(),
        )
    }

    /// Operators used for embedding extraction and gradient checks.
    pub fn for_inference(graph: &IndexedGraph, config: &GnnConfig) -> Self {
        match config.variant {
            GnnVariant::Gcn => Operators::Gcn(graph.normalized_adjacency(config.weighting)),
            GnnVariant::Sage => Self::sampled(graph, config, &[SAGE_INFER_STREAM]),
        }
    }

    /// SAGE neighbor samples redrawn for `epoch`.
    pub fn for_epoch(graph: &IndexedGraph, config: &GnnConfig, epoch: usize) -> Self {
        match config.variant {
            GnnVariant::Gcn => Operators::Gcn(graph.normalized_adjacency(config.weighting)),
            GnnVariant::Sage => Self::sampled(graph, config, &[SAGE_TRAIN_STREAM, epoch as u64]),
        }
    }

    fn variant(&self) -> GnnVariant {
        match self {
            Operators::Gcn(_) => GnnVariant::Gcn,
            Operators::Sage(_) => GnnVariant::Sage,
        }
    }
}

/// Hidden graph layers with ReLU, then a dense projection to class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub variant: GnnVariant,
    pub layers: usize,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    pub params: Vec<Param>,
}

struct LayerCache {
    input: Array2<f64>,
    agg: Array2<f64>,
    pre: Array2<f64>,
    mask: Option<Array2<f64>>,
}

pub(crate) struct Cache {
    layers: Vec<LayerCache>,
    pub(crate) hidden: Array2<f64>,
    out_input: Array2<f64>,
    out_mask: Option<Array2<f64>>,
    pub(crate) logits: Array2<f64>,
}

fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    let limit = libm::sqrt(6.0 / (rows + cols) as f64);
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
}

fn dropout(x: Array2<f64>, p: f64, rng: &mut Rng) -> (Array2<f64>, Array2<f64>) {
    let keep = 1.0 / (1.0 - p);
    let mask = Array2::from_shape_simple_fn(x.raw_dim(), || {
        if rng.random::<f64>() < p {
            0.0
        } else {
            keep
        }
    });
    (x * &mask, mask)
}

fn col_sums(x: &Array2<f64>) -> Array2<f64> {
    x.sum_axis(Axis(0)).insert_axis(Axis(0))
}

impl GnnModel {
    fn per_layer(variant: GnnVariant) -> usize {
        match variant {
            GnnVariant::Gcn => 2,
            GnnVariant::Sage => 3,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(
        variant: GnnVariant,
        in_dim: usize,
        hidden_dim: usize,
        layers: usize,
        n_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if in_dim == 0 || hidden_dim == 0 || layers == 0 || n_classes == 0 {
            return Err(invalid!("model dimensions must all be >= 1"));
        }
        let mut rng = rng_for(seed, &[INIT_STREAM]);
        let mut params = Vec::new();
        for l in 0..layers {
            let fan_in = if l == 0 { in_dim } else { hidden_dim };
            match variant {
                GnnVariant::Gcn => params.push(Param {
                    name: format!("layer{l}.weight"),
                    value: glorot(fan_in, hidden_dim, &mut rng),
                    decay: true,
                }),
                GnnVariant::Sage => {
                    for part in ["weight_self", "weight_neigh"] {
                        params.push(Param {
                            name: format!("layer{l}.{part}"),
                            value: glorot(fan_in, hidden_dim, &mut rng),
                            decay: true,
                        });
                    }
                }
            }
            params.push(Param {
                name: format!("layer{l}.bias"),
                value: Array2::zeros((1, hidden_dim)),
                decay: false,
            });
        }
        params.push(Param {
            name: "output.weight".into(),
            value: glorot(hidden_dim, n_classes, &mut rng),
            decay: true,
        });
        params.push(Param {
            name: "output.bias".into(),
            value: Array2::zeros((1, n_classes)),
            decay: false,
        });
        Ok(GnnModel {
            variant,
            layers,
            in_dim,
            hidden_dim,
            n_classes,
            params,
        })
    }

    /// Rebuilds a model from a parameter list in `init` order, checking
    /// that the shapes chain.
    pub fn from_params(variant: GnnVariant, params: Vec<Param>) -> Result<Self> {
        let per = Self::per_layer(variant);
        if params.len() < per + 2 || !(params.len() - 2).is_multiple_of(per) {
            return Err(invalid!("{} parameters do not form a {variant:?} model", params.len()));
        }
        let layers = (params.len() - 2) / per;
        let in_dim = params[0].value.nrows();
        let hidden_dim = params[0].value.ncols();
        let n_classes = params[params.len() - 1].value.ncols();
        let model = GnnModel {
            variant,
            layers,
            in_dim,
            hidden_dim,
            n_classes,
            params,
        };
        let reference = GnnModel::init(variant, in_dim, hidden_dim.max(1), layers, n_classes.max(1), 0)?;
        for (got, want) in model.params.iter().zip(&reference.params) {
            if got.value.shape() != want.value.shape() || got.name != want.name {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {} has shape {:?}, expected {} {:?}",
                    got.name,
                    got.value.shape(),
                    want.name,
                    want.value.shape()
                )));
            }
        }
        if !model.is_finite() {
            return Err(invalid!("model parameters contain non-finite values"));
        }
        Ok(model)
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.iter().all(|v| v.is_finite()))
    }

    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    fn check_inputs(&self, ops: &Operators, x: &ArrayView2<f64>) -> Result<()> {
        if ops.variant() != self.variant {
            return Err(invalid!("operators do not match a {:?} model", self.variant));
        }
        if x.ncols() != self.in_dim {
            return Err(Error::ShapeMismatch(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.in_dim
            )));
        }
        let n_ok = match ops {
            Operators::Gcn(a) => a.shape() == (x.nrows(), x.nrows()),
            Operators::Sage(ms) => {
                ms.len() == self.layers && ms.iter().all(|m| m.shape() == (x.nrows(), x.nrows()))
            }
        };
        if !n_ok {
            return Err(Error::ShapeMismatch(format!(
                "propagation operators do not fit {} nodes",
                x.nrows()
            )));
        }
        Ok(())
    }

    pub(crate) fn forward_cached(
        &self,
        ops: &Operators,
        x: ArrayView2<f64>,
        mut drop: Option<(f64, &mut Rng)>,
    ) -> Result<Cache> {
        self.check_inputs(ops, &x)?;
        let per = Self::per_layer(self.variant);
        let mut h = x.to_owned();
        let mut layers = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            let (input, mask) = match drop.as_mut() {
                Some((p, rng)) if *p > 0.0 => {
                    let (d, m) = dropout(h, *p, rng);
                    (d, Some(m))
                }
                _ => (h, None),
            };
            let base = l * per;
            let bias = &self.params[base + per - 1].value;
            let (agg, mut pre) = match ops {
                Operators::Gcn(a) => {
                    let w = &self.params[base].value;
                    check_linear(&input.view(), &w.view(), &bias.view())?;
                    let agg = a.matmul(&input.view());
                    let pre = agg.dot(w);
                    (agg, pre)
                }
                Operators::Sage(ms) => {
                    let (ws, wn) = (&self.params[base].value, &self.params[base + 1].value);
                    check_linear(&input.view(), &ws.view(), &bias.view())?;
                    let agg = ms[l].matmul(&input.view());
                    let pre = input.dot(ws) + agg.dot(wn);
                    (agg, pre)
                }
            };
            pre += &bias.row(0);
            h = pre.mapv(|v| v.max(0.0));
            layers.push(LayerCache {
                input,
                agg,
                pre,
                mask,
            });
        }
        let hidden = h;
        let (out_input, out_mask) = match drop.as_mut() {
            Some((p, rng)) if *p > 0.0 => {
                let (d, m) = dropout(hidden.clone(), *p, rng);
                (d, Some(m))
            }
            _ => (hidden.clone(), None),
        };
        let n = self.params.len();
        let mut logits = out_input.dot(&self.params[n - 2].value);
        logits += &self.params[n - 1].value.row(0);
        Ok(Cache {
            layers,
            hidden,
            out_input,
            out_mask,
            logits,
        })
    }

    /// Dropout-free forward pass: `(last hidden activation, logits)`.
    pub fn forward(&self, ops: &Operators, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let c = self.forward_cached(ops, x, None)?;
        Ok((c.hidden, c.logits))
    }

    /// `wd / 2` times the squared norm of every decayed parameter.
    pub fn penalty(&self, weight_decay: f64) -> f64 {
        0.5 * weight_decay
            * self
                .params
                .iter()
                .filter(|p| p.decay)
                .map(|p| p.value.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }

    pub(crate) fn backward(
        &self,
        ops: &Operators,
        cache: &Cache,
        dlogits: Array2<f64>,
        weight_decay: f64,
    ) -> Vec<Array2<f64>> {
        let per = Self::per_layer(self.variant);
        let n = self.params.len();
        let mut grads: Vec<Array2<f64>> = Vec::with_capacity(n);
        grads.resize_with(n, || Array2::zeros((0, 0)));
        grads[n - 2] = cache.out_input.t().dot(&dlogits);
        grads[n - 1] = col_sums(&dlogits);
        let mut dh = dlogits.dot(&self.params[n - 2].value.t());
        if let Some(m) = &cache.out_mask {
            dh *= m;
        }
        for l in (0..self.layers).rev() {
            let lc = &cache.layers[l];
            let base = l * per;
            let mut dz = dh;
            dz.zip_mut_with(&lc.pre, |g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            grads[base + per - 1] = col_sums(&dz);
            let din = match ops {
                Operators::Gcn(a) => {
                    grads[base] = lc.agg.t().dot(&dz);
                    (l > 0).then(|| {
                        a.transpose_matmul(&dz.dot(&self.params[base].value.t()).view())
                    })
                }
                Operators::Sage(ms) => {
                    grads[base] = lc.input.t().dot(&dz);
                    grads[base + 1] = lc.agg.t().dot(&dz);
                    (l > 0).then(|| {
                        dz.dot(&self.params[base].value.t())
                            + ms[l].transpose_matmul(
                                &dz.dot(&self.params[base + 1].value.t()).view(),
                            )
                    })
                }
            };
            let Some(mut din) = din else { break };
            if let Some(m) = &lc.mask {
                din *= m;
            }
            dh = din;
        }
        if weight_decay != 0.0 {
            for (g, p) in grads.iter_mut().zip(&self.params) {
                if p.decay {
                    g.scaled_add(weight_decay, &p.value);
                }
            }
        }
        grads
    }

    pub(crate) fn loss_and_gradients_with(
        &self,
        ops: &Operators,
        x: ArrayView2<f64>,
        mask: &LabelMask,
        weight_decay: f64,
        drop: Option<(f64, &mut Rng)>,
    ) -> Result<(f64, Vec<Array2<f64>>, Cache)> {
        if mask.labels.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "label mask covers {} nodes, features {}",
                mask.labels.len(),
                x.nrows()
            )));
        }
        if mask.n_classes != self.n_classes {
            return Err(invalid!(
                "label mask has {} classes, model {}",
                mask.n_classes,
                self.n_classes
            ));
        }
        let cache = self.forward_cached(ops, x, drop)?;
        let (ce, dlogits) = cross_entropy(&cache.logits, mask);
        let loss = ce + self.penalty(weight_decay);
        let grads = self.backward(ops, &cache, dlogits, weight_decay);
        Ok((loss, grads, cache))
    }

    /// Mean softmax cross-entropy over train-tagged nodes plus the L2
    /// penalty, and its gradient for every parameter, without dropout.
    pub fn loss_and_gradients(
        &self,
        ops: &Operators,
        x: ArrayView2<f64>,
        mask: &LabelMask,
        weight_decay: f64,
    ) -> Result<(f64, Vec<Array2<f64>>)> {
        let (loss, grads, _) = self.loss_and_gradients_with(ops, x, mask, weight_decay, None)?;
        Ok((loss, grads))
    }

    /// Loss only, without dropout.
    pub fn loss(
        &self,
        ops: &Operators,
        x: ArrayView2<f64>,
        mask: &LabelMask,
        weight_decay: f64,
    ) -> Result<f64> {
        let cache = self.forward_cached(ops, x, None)?;
        Ok(cross_entropy(&cache.logits, mask).0 + self.penalty(weight_decay))
    }
}

/// Mean cross-entropy over train nodes and its gradient wrt the logits.
pub(crate) fn cross_entropy(logits: &Array2<f64>, mask: &LabelMask) -> (f64, Array2<f64>) {
    let mut grad = Array2::zeros(logits.raw_dim());
    let train: Vec<usize> = mask.indices(Split::Train);
    if train.is_empty() {
        return (0.0, grad);
    }
    let scale = 1.0 / train.len() as f64;
    let mut loss = 0.0;
    for &i in &train {
        let row = logits.row(i);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + libm::log(row.iter().map(|&z| libm::exp(z - m)).sum::<f64>());
        let y = mask.labels[i].expect("train nodes are labeled");
        loss += lse - row[y];
        for (c, &z) in row.iter().enumerate() {
            let p = libm::exp(z - lse);
            grad[[i, c]] = scale * (p - if c == y { 1.0 } else { 0.0 });
        }
    }
    (loss * scale, grad)
}

pub(crate) fn argmax_rows(logits: &Array2<f64>) -> Vec<usize> {
    logits
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (c, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}
