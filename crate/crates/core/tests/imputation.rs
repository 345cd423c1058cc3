mod common;

use mediaprof_core::features::{
    features_from_values, impute_missing, NodeFeatures, METRIC_COUNT,
};
use mediaprof_core::graph::IndexedGraph;
use rand::Rng as _;

/// All-pairs hop distances by Floyd-Warshall.
fn hop_distances(g: &IndexedGraph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for v in 0..n {
        d[v][v] = 0;
        for &u in g.neighbors(v) {
            d[v][u] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Independent statement of the rule: rank every reachable node that has
/// the metric by (distance, strongest edge into the previous distance
/// shell descending, domain), keep the first k, average in that order.
fn oracle(g: &IndexedGraph, feats: &[NodeFeatures], k: usize) -> Vec<NodeFeatures> {
    let n = g.node_count();
    let d = hop_distances(g);
    let inf = usize::MAX / 4;
    let mut out = feats.to_vec();
    for m in 0..METRIC_COUNT {
        let present: Vec<f64> = feats.iter().filter(|f| !f.missing[m]).map(|f| f.values[m]).collect();
        let global = if present.is_empty() {
            0.0
        } else {
            present.iter().sum::<f64>() / present.len() as f64
        };
        for v in 0..n {
            if !feats[v].missing[m] {
                continue;
            }
            let mut cands: Vec<(usize, f64, &str, f64)> = (0..n)
                .filter(|&u| u != v && d[v][u] < inf && !feats[u].missing[m])
                .map(|u| {
                    let tie = (0..n)
                        .filter(|&x| d[v][x] + 1 == d[v][u])
                        .filter_map(|x| g.edge_weight(u, x))
                        .fold(f64::NEG_INFINITY, f64::max);
                    (d[v][u], tie, g.domain(u), feats[u].values[m])
                })
                .collect();
            cands.sort_by(|a, b| {
                a.0.cmp(&b.0)
                    .then(b.1.total_cmp(&a.1))
                    .then(a.2.cmp(b.2))
            });
            cands.truncate(k);
            out[v].values[m] = if cands.is_empty() {
                global
            } else {
                cands.iter().map(|c| c.3).sum::<f64>() / cands.len() as f64
            };
            out[v].missing[m] = false;
        }
    }
    out
}

fn planted(seed: u64) -> (IndexedGraph, Vec<NodeFeatures>) {
    let mut r = common::rng(seed);
    let n = r.random_range(2..=100);
    let p = r.random_range(0.01..0.15);
    let g = common::random_graph(&mut r, n, p);
    let feats = (0..n)
        .map(|_| {
            let mut vals = [None; METRIC_COUNT];
            for v in vals.iter_mut() {
                if r.random::<f64>() >= 0.3 {
                    *v = Some(r.random_range(0..100) as f64 / 4.0);
                }
            }
            features_from_values(vals)
        })
        .collect();
    (g, feats)
}

#[test]
fn matches_brute_force_oracle_on_50_graphs() {
    for seed in 0..50 {
        let (g, feats) = planted(seed);
        let (got, _) = impute_missing(&g, &feats, 5).unwrap();
        assert_eq!(got, oracle(&g, &feats, 5), "graph {seed}");
    }
}

#[test]
fn idempotent_and_preserves_present_values() {
    for seed in 50..60 {
        let (g, feats) = planted(seed);
        let (once, _) = impute_missing(&g, &feats, 5).unwrap();
        let (twice, summary) = impute_missing(&g, &once, 5).unwrap();
        assert_eq!(once, twice);
        assert_eq!(summary.imputed, [0; METRIC_COUNT]);
        for (before, after) in feats.iter().zip(&once) {
            assert_eq!(before.flags, after.flags);
            assert!(after.missing.iter().all(|&m| !m));
            assert!(after.feature_vector().iter().all(|v| v.is_finite()));
            for m in 0..METRIC_COUNT {
                if !before.missing[m] {
                    assert_eq!(before.values[m], after.values[m]);
                }
            }
        }
    }
}
