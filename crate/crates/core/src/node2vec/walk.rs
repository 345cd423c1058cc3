use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use super::Node2VecConfig;
use crate::error::{invalid, Result};
use crate::graph::{EdgeWeighting, IndexedGraph};
use crate::rng::rng_for;

const WALK_STREAM: u64 = 0x5741_4c4b;

/// Walks as node-index sequences. Each start node contributes `num_walks`
/// walks; walks stop early at dead ends.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<u32>>,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

fn bias_weights(
    graph: &IndexedGraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
    weighting: EdgeWeighting,
) -> Result<Vec<f64>> {
    if let Some(t) = prev {
        if !graph.has_edge(t, cur) {
            return Err(invalid!("node {cur} is not adjacent to previous node {t}"));
        }
    }
    Ok(graph
        .neighbors(cur)
        .iter()
        .zip(graph.neighbor_weights(cur))
        .map(|(&x, &w)| {
            let w = match weighting {
                EdgeWeighting::Score => w,
                EdgeWeighting::Binary => 1.0,
            };
            let alpha = match prev {
                None => 1.0,
                Some(t) if x == t => 1.0 / p,
                Some(t) if graph.has_edge(t, x) => 1.0,
                Some(_) => 1.0 / q,
            };
            w * alpha
        })
        .collect())
}

/// Next-step distribution from `cur` given the node the walk came from.
/// Empty when `cur` has no neighbors.
pub fn transition_weights(
    graph: &IndexedGraph,
    prev: Option<usize>,
    cur: usize,
    p: f64,
    q: f64,
    weighting: EdgeWeighting,
) -> Result<Vec<(usize, f64)>> {
    let raw = bias_weights(graph, prev, cur, p, q, weighting)?;
    let total: f64 = raw.iter().sum();
    Ok(graph
        .neighbors(cur)
        .iter()
        .zip(raw)
        .map(|(&x, w)| (x, w / total))
        .collect())
}

/// Draws walk steps from alias tables built lazily per node (first step)
/// and per directed edge `prev -> cur`.
pub struct WalkSampler<'g> {
    graph: &'g IndexedGraph,
    p: f64,
    q: f64,
    weighting: EdgeWeighting,
    first: Vec<Option<WeightedAliasIndex<f64>>>,
    second: Vec<Option<WeightedAliasIndex<f64>>>,
}

impl<'g> WalkSampler<'g> {
    pub fn new(graph: &'g IndexedGraph, p: f64, q: f64, weighting: EdgeWeighting) -> Self {
        WalkSampler {
            graph,
            p,
            q,
            weighting,
            first: vec![None; graph.node_count()],
            second: vec![None; 2 * graph.edge_count()],
        }
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        prev: Option<usize>,
        cur: usize,
        rng: &mut R,
    ) -> Option<usize> {
        let graph = self.graph;
        if graph.degree(cur) == 0 {
            return None;
        }
        let slot = match prev {
            None => &mut self.first[cur],
            Some(t) => &mut self.second[graph.edge_slot(t, cur)?],
        };
        if slot.is_none() {
            let w = bias_weights(graph, prev, cur, self.p, self.q, self.weighting).ok()?;
            *slot = Some(WeightedAliasIndex::new(w).ok()?);
        }
        let i = slot.as_ref()?.sample(rng);
        Some(graph.neighbors(cur)[i])
    }

    pub fn walk<R: Rng + ?Sized>(&mut self, start: usize, length: usize, rng: &mut R) -> Vec<u32> {
        let mut walk = Vec::with_capacity(length);
        walk.push(start as u32);
        let mut prev = None;
        let mut cur = start;
        while walk.len() < length {
            let Some(next) = self.step(prev, cur, rng) else {
                break;
            };
            walk.push(next as u32);
            prev = Some(cur);
            cur = next;
        }
        walk
    }
}

/// `num_walks` rounds over every node in index order. Each walk draws from
/// its own stream derived from `(seed, round, start)`.
pub fn sample_walks(graph: &IndexedGraph, config: &Node2VecConfig) -> Result<WalkCorpus> {
    config.validate()?;
    if graph.node_count() == 0 {
        return Err(invalid!("cannot sample walks on an empty graph"));
    }
    let mut sampler = WalkSampler::new(graph, config.p, config.q, config.weighting);
    let mut walks = Vec::with_capacity(config.num_walks * graph.node_count());
    for round in 0..config.num_walks {
        for v in 0..graph.node_count() {
            let mut rng = rng_for(config.seed, &[WALK_STREAM, round as u64, v as u64]);
            walks.push(sampler.walk(v, config.walk_length, &mut rng));
        }
    }
    Ok(WalkCorpus { walks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle_with_pendant() -> IndexedGraph {
        // a=0, b=1, c=2, d=3
        IndexedGraph::anonymous(4, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (1, 3, 1.0)]).unwrap()
    }

    #[test]
    fn bias_rule_by_hand() {
        let g = triangle_with_pendant();
        let raw = bias_weights(&g, Some(0), 1, 0.5, 2.0, EdgeWeighting::Score).unwrap();
        assert_eq!(raw, vec![2.0, 1.0, 0.5]);
        let dist = transition_weights(&g, Some(0), 1, 0.5, 2.0, EdgeWeighting::Score).unwrap();
        let expect = [(0, 4.0 / 7.0), (2, 2.0 / 7.0), (3, 1.0 / 7.0)];
        for ((x, p), (ex, ep)) in dist.iter().zip(expect) {
            assert_eq!(*x, ex);
            assert!((p - ep).abs() < 1e-15);
        }
    }

    #[test]
    fn non_adjacent_prev_rejected() {
        let g = triangle_with_pendant();
        assert!(transition_weights(&g, Some(3), 0, 1.0, 1.0, EdgeWeighting::Score).is_err());
    }

    #[test]
    fn dead_end_gives_empty_distribution() {
        let g = IndexedGraph::anonymous(2, []).unwrap();
        assert!(transition_weights(&g, None, 0, 1.0, 1.0, EdgeWeighting::Score)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn path_graph_alternates() {
        let g = IndexedGraph::anonymous(2, [(0, 1, 3.0)]).unwrap();
        let config = Node2VecConfig {
            p: 1.0,
            q: 1.0,
            num_walks: 1,
            ..Default::default()
        };
        let corpus = sample_walks(&g, &config).unwrap();
        let walk = &corpus.walks[0];
        assert_eq!(walk.len(), 100);
        assert!(walk.iter().enumerate().all(|(i, &v)| v as usize == i % 2));
    }

    #[test]
    fn isolated_nodes_yield_single_element_walks() {
        let g = IndexedGraph::anonymous(3, [(0, 1, 1.0)]).unwrap();
        let config = Node2VecConfig {
            num_walks: 2,
            walk_length: 10,
            ..Default::default()
        };
        let corpus = sample_walks(&g, &config).unwrap();
        assert_eq!(corpus.walks.len(), 6);
        assert_eq!(corpus.walks[2], vec![2]);
        assert_eq!(corpus.walks[5], vec![2]);
    }
}
