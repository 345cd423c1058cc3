mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mediaprof_core::gnn::{GnnModel, GnnVariant, Operators};
use mediaprof_core::graph::{
    EdgeWeighting, IndexedGraph, MediaGraph, OverlapRecord, OverlapTarget, RecordMap,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng as _;

fn regular_records(n: usize, degree: usize, seed: u64) -> RecordMap {
    let mut r = common::rng(seed);
    let name = |i: usize| format!("d{i:03}.net");
    let records = (0..n).map(|i| {
        let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        others.shuffle(&mut r);
        OverlapRecord {
            source: name(i),
            targets: others[..degree]
                .iter()
                .map(|&j| OverlapTarget {
                    domain: name(j),
                    score: r.random_range(10.0..60.0),
                })
                .collect(),
        }
    });
    RecordMap::from_records(records.collect::<Vec<_>>()).unwrap()
}

/// Nodes within `hops` steps of `seed` following record links.
fn bfs_within(records: &RecordMap, seed: &str, hops: usize) -> BTreeSet<String> {
    let adj: BTreeMap<&str, Vec<&str>> = records
        .iter()
        .map(|r| (r.source.as_str(), r.targets.iter().map(|t| t.domain.as_str()).collect()))
        .collect();
    let mut dist = BTreeMap::from([(seed.to_string(), 0usize)]);
    let mut queue = VecDeque::from([seed.to_string()]);
    while let Some(u) = queue.pop_front() {
        let d = dist[&u];
        if d == hops {
            continue;
        }
        for &v in adj.get(u.as_str()).into_iter().flatten() {
            if !dist.contains_key(v) {
                dist.insert(v.to_string(), d + 1);
                queue.push_back(v.to_string());
            }
        }
    }
    dist.into_keys().collect()
}

#[test]
fn expansion_matches_bfs_oracle() {
    for seed in 0..5 {
        let records = regular_records(200, 3, seed);
        let start = "d000.net".to_string();
        let mut g = MediaGraph::build_level0(std::slice::from_ref(&start), &records).unwrap();
        let nodes: BTreeSet<String> = g.nodes().map(|n| n.domain).collect();
        assert_eq!(nodes, bfs_within(&records, &start, 1));
        for k in 1..=4u32 {
            let before = g.clone();
            g.expand_level(&records, k).unwrap();
            let nodes: BTreeSet<String> = g.nodes().map(|n| n.domain).collect();
            assert_eq!(nodes, bfs_within(&records, &start, k as usize + 1), "level {k}");
            assert!(before.nodes().all(|n| g.node(&n.domain) == Some(n.clone())));
            assert!(before.edges().all(|e| g.edge_score(&e.a, &e.b).is_some()));
            for node in g.nodes() {
                assert_eq!(node.level == 0, node.is_seed);
            }
        }
    }
}

#[test]
fn seed_order_does_not_matter() {
    let records = regular_records(60, 4, 11);
    let mut seeds: Vec<String> = (0..10).map(|i| format!("d{:03}.net", i * 5)).collect();
    let mut a = MediaGraph::build_level0(&seeds, &records).unwrap();
    a.expand_to(&records, 2).unwrap();
    seeds.reverse();
    let mut b = MediaGraph::build_level0(&seeds, &records).unwrap();
    b.expand_to(&records, 2).unwrap();
    assert_eq!(a, b);
}

fn permuted(graph: &IndexedGraph, perm: &[usize]) -> IndexedGraph {
    // node v of `graph` becomes node perm[v]
    let mut domains = vec![String::new(); perm.len()];
    for (v, &p) in perm.iter().enumerate() {
        domains[p] = graph.domain(v).to_string();
    }
    IndexedGraph::from_edges(domains, graph.edges().map(|(u, v, w)| (perm[u], perm[v], w))).unwrap()
}

#[test]
fn gcn_forward_is_permutation_equivariant() {
    for case in 0..100u64 {
        let mut r = common::rng(1000 + case);
        let n = r.random_range(2..30);
        let g = common::random_graph(&mut r, n, 0.2);
        let x = Array2::from_shape_simple_fn((n, 4), || r.random_range(-1.0..1.0));
        let model = GnnModel::init(GnnVariant::Gcn, 4, 6, 2, 3, case).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let gp = permuted(&g, &perm);
        let mut xp = Array2::zeros((n, 4));
        for v in 0..n {
            xp.row_mut(perm[v]).assign(&x.row(v));
        }
        for weighting in [EdgeWeighting::Score, EdgeWeighting::Binary] {
            let (h, logits) = model
                .forward(&Operators::Gcn(g.normalized_adjacency(weighting)), x.view())
                .unwrap();
            let (hp, logitsp) = model
                .forward(&Operators::Gcn(gp.normalized_adjacency(weighting)), xp.view())
                .unwrap();
            for v in 0..n {
                assert_eq!(h.row(v), hp.row(perm[v]), "case {case}");
                assert_eq!(logits.row(v), logitsp.row(perm[v]), "case {case}");
            }
        }
    }
}

#[test]
fn unweighted_gcn_ignores_edge_order() {
    let mut r = common::rng(5);
    let g = common::random_graph(&mut r, 40, 0.1);
    let mut edges: Vec<_> = g.edges().collect();
    edges.shuffle(&mut r);
    let h = IndexedGraph::from_edges(g.domains().to_vec(), edges.iter().map(|&(u, v, w)| (v, u, w)))
        .unwrap();
    let x = Array2::from_shape_simple_fn((40, 3), || r.random_range(-1.0..1.0));
    let model = GnnModel::init(GnnVariant::Gcn, 3, 5, 3, 2, 1).unwrap();
    let a = model
        .forward(&Operators::Gcn(g.normalized_adjacency(EdgeWeighting::Binary)), x.view())
        .unwrap();
    let b = model
        .forward(&Operators::Gcn(h.normalized_adjacency(EdgeWeighting::Binary)), x.view())
        .unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn normalized_adjacency_is_symmetric_and_nonnegative(
        seed in any::<u64>(), n in 1usize..40, p in 0.0f64..0.5
    ) {
        let g = common::random_graph(&mut common::rng(seed), n, p);
        for weighting in [EdgeWeighting::Score, EdgeWeighting::Binary] {
            let a = g.normalized_adjacency(weighting);
            prop_assert_eq!(a.asymmetry(), 0.0);
            let dense = a.to_dense();
            prop_assert!(dense.iter().all(|&v| v >= 0.0));
            for v in 0..n {
                if g.degree(v) == 0 {
                    prop_assert_eq!(dense[[v, v]], 1.0);
                }
            }
        }
    }
}
