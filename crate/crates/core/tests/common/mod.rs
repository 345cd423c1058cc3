#![allow(dead_code)]

use mediaprof_core::graph::IndexedGraph;
use mediaprof_core::rng::{rng_for, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Erdos-Renyi graph with integer weights in 1..=4 (so ties occur) and
/// domain names in shuffled order, so index order and name order differ.
pub fn random_graph(rng: &mut Rng, n: usize, p: f64) -> IndexedGraph {
    let mut names: Vec<String> = (0..n).map(|i| format!("n{i:04}.org")).collect();
    names.shuffle(rng);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(1..=4) as f64));
            }
        }
    }
    IndexedGraph::from_edges(names, edges).unwrap()
}

pub fn rng(seed: u64) -> Rng {
    rng_for(seed, &[0x7e57])
}

/// Two-block planted partition on `n` nodes; block of node i is i % 2.
pub fn two_block_sbm(n: usize, p_in: f64, p_out: f64, seed: u64) -> (IndexedGraph, Vec<usize>) {
    let mut r = rng(seed);
    let blocks: Vec<usize> = (0..n).map(|i| i % 2).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if blocks[u] == blocks[v] { p_in } else { p_out };
            if r.random::<f64>() < p {
                edges.push((u, v, 1.0));
            }
        }
    }
    (IndexedGraph::anonymous(n, edges).unwrap(), blocks)
}
