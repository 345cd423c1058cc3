use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::IndexedGraph;
use crate::rng::rng_for;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub(crate) fn apply(self, mut z: Array2<f64>) -> Array2<f64> {
        if self == Activation::Relu {
            z.mapv_inplace(|v| v.max(0.0));
        }
        z
    }
}

pub(crate) fn check_linear(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
) -> Result<()> {
    if x.ncols() != w.nrows() || b.nrows() != 1 || b.ncols() != w.ncols() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "input {:?}, weight {:?}, bias {:?}",
            x.shape(),
            w.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `act(a_hat * h * w + b)`, with the bias broadcast over rows.
pub fn gcn_layer_forward(
    a_hat: &CsrMatrix,
    h: ArrayView2<f64>,
    w: ArrayView2<f64>,
    b: ArrayView2<f64>,
    activation: Activation,
) -> Result<Array2<f64>> {
    let (rows, cols) = a_hat.shape();
    if rows != cols || cols != h.nrows() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "adjacency {:?} against features {:?}",
            a_hat.shape(),
            h.shape()
        )));
    }
    check_linear(&h, &w, &b)?;
    let mut z = a_hat.matmul(&h).dot(&w);
    z += &b.row(0);
    Ok(activation.apply(z))
}

/// Row-stochastic operator averaging over up to `sample_size` neighbors per
/// node, drawn without replacement. Isolated nodes get an empty row.
pub fn sample_mean_operator<R: Rng + ?Sized>(
    graph: &IndexedGraph,
    sample_size: usize,
    rng: &mut R,
) -> CsrMatrix {
    let n = graph.node_count();
    let mut triplets = Vec::new();
    for v in 0..n {
        let nbrs = graph.neighbors(v);
        let k = sample_size.min(nbrs.len());
        if k == 0 {
            continue;
        }
        let mut picked: Vec<usize> = if k == nbrs.len() {
            nbrs.to_vec()
        } else {
            rand::seq::index::sample(rng, nbrs.len(), k)
                .into_iter()
                .map(|i| nbrs[i])
                .collect()
        };
        picked.sort_unstable();
        let w = 1.0 / k as f64;
        triplets.extend(picked.into_iter().map(|u| (v, u, w)));
    }
    CsrMatrix::from_row_triplets(n, n, triplets)
}

/// `act(h * w_self + mean_sampled(h) * w_neigh + b)`.
#[allow(clippy::too_many_arguments)]
pub fn sage_layer_forward(
    graph: &IndexedGraph,
    h: ArrayView2<f64>,
    w_self: ArrayView2<f64>,
    w_neigh: ArrayView2<f64>,
    b: ArrayView2<f64>,
    sample_size: usize,
    activation: Activation,
    seed: u64,
) -> Result<Array2<f64>> {
    if sample_size == 0 {
        return Err(crate::error::invalid!("sample_size must be >= 1"));
    }
    if h.nrows() != graph.node_count() || w_self.shape() != w_neigh.shape() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "graph of {} nodes, features {:?}, weights {:?} / {:?}",
            graph.node_count(),
            h.shape(),
            w_self.shape(),
            w_neigh.shape()
        )));
    }
    check_linear(&h, &w_self, &b)?;
    let m = sample_mean_operator(graph, sample_size, &mut rng_for(seed, &[]));
    Ok(activation.apply(sage_pre_activation(&m, h, w_self, w_neigh, b)))
}

pub(crate) fn sage_pre_activation(
    m: &CsrMatrix,
    h: ArrayView2<f64>,
    w_self: ArrayView2<f64>,
    w_neigh: ArrayView2<f64>,
    b: ArrayView2<f64>,
) -> Array2<f64> {
    let mut z = h.dot(&w_self) + m.matmul(&h).dot(&w_neigh);
    z += &b.row(0);
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeWeighting;
    use alloc::vec;
    use ndarray::{array, Array2};

    #[test]
    fn gcn_single_self_loop_is_relu() {
        let a = CsrMatrix::from_row_triplets(1, 1, [(0, 0, 1.0)]);
        let h = array![[-1.5, 2.0]];
        let out = gcn_layer_forward(
            &a,
            h.view(),
            Array2::eye(2).view(),
            Array2::zeros((1, 2)).view(),
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(out, array![[0.0, 2.0]]);
    }

    #[test]
    fn gcn_two_node_hand_product() {
        let g = IndexedGraph::anonymous(2, [(0, 1, 7.0)]).unwrap();
        let a = g.normalized_adjacency(EdgeWeighting::Binary);
        let out = gcn_layer_forward(
            &a,
            Array2::eye(2).view(),
            Array2::eye(2).view(),
            Array2::zeros((1, 2)).view(),
            Activation::Relu,
        )
        .unwrap();
        assert_eq!(out, array![[0.5, 0.5], [0.5, 0.5]]);
        let zero = gcn_layer_forward(
            &a,
            Array2::zeros((2, 3)).view(),
            Array2::ones((3, 2)).view(),
            Array2::zeros((1, 2)).view(),
            Activation::Identity,
        )
        .unwrap();
        assert_eq!(zero, Array2::<f64>::zeros((2, 2)));
        assert!(gcn_layer_forward(
            &a,
            Array2::zeros((3, 2)).view(),
            Array2::eye(2).view(),
            Array2::zeros((1, 2)).view(),
            Activation::Relu,
        )
        .is_err());
    }

    #[test]
    fn sage_star_center_mean() {
        let g = IndexedGraph::anonymous(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let h = array![[10.0], [1.0], [2.0], [3.0]];
        let out = sage_layer_forward(
            &g,
            h.view(),
            array![[0.0]].view(),
            array![[1.0]].view(),
            array![[0.0]].view(),
            3,
            Activation::Identity,
            0,
        )
        .unwrap();
        assert_eq!(out[[0, 0]], 2.0);
        assert_eq!(out[[1, 0]], 10.0);
    }

    #[test]
    fn sage_isolated_node_ignores_neighbor_weights() {
        let g = IndexedGraph::anonymous(3, [(0, 1, 1.0)]).unwrap();
        let h = array![[1.0], [2.0], [4.0]];
        let out = sage_layer_forward(
            &g,
            h.view(),
            array![[0.5]].view(),
            array![[123.0]].view(),
            array![[1.0]].view(),
            1,
            Activation::Identity,
            9,
        )
        .unwrap();
        assert_eq!(out[[2, 0]], 3.0);
    }

    #[test]
    fn sampling_saturates_to_full_mean() {
        let g = IndexedGraph::anonymous(5, [(0, 1, 1.0), (0, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0)])
            .unwrap();
        let small = sample_mean_operator(&g, 2, &mut rng_for(1, &[]));
        let big = sample_mean_operator(&g, 50, &mut rng_for(2, &[]));
        assert_eq!(small, big);
        let one = sample_mean_operator(&g, 1, &mut rng_for(3, &[]));
        for v in 0..5 {
            assert_eq!(one.row(v).0.len(), 1);
            assert!(g.has_edge(v, one.row(v).0[0]));
        }
    }
}
