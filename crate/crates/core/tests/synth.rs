use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mediaprof_core::graph::{MediaGraph, RecordMap};
use mediaprof_core::synth::{generate, plant_unlabeled_halo, SynthConfig, SynthDataset};

fn config(n: usize, p_in: f64, p_out: f64, label_fraction: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        n_nodes: n,
        p_in,
        p_out,
        label_fraction,
        seed,
        ..Default::default()
    }
}

fn records(d: &SynthDataset) -> RecordMap {
    RecordMap::from_records(d.records.clone()).unwrap()
}

#[test]
fn intra_class_edge_fraction_matches_block_model() {
    let (n, k, p_in, p_out) = (300usize, 3usize, 0.05, 0.002);
    let mut intra = 0usize;
    let mut total = 0usize;
    for seed in 0..20 {
        let d = generate(&config(n, p_in, p_out, 0.6, seed)).unwrap();
        intra += d.edges.iter().filter(|e| d.blocks[e.0] == d.blocks[e.1]).count();
        total += d.edges.len();
    }
    let size = (n / k) as f64;
    let e_in = k as f64 * size * (size - 1.0) / 2.0;
    let e_out = (n * (n - 1) / 2) as f64 - e_in;
    let expected = p_in * e_in / (p_in * e_in + p_out * e_out);
    let observed = intra as f64 / total as f64;
    assert!((observed - expected).abs() <= 0.02, "{observed} vs {expected}");
}

fn bfs_levels(d: &SynthDataset, seeds: &[String]) -> BTreeMap<String, u32> {
    let arcs: BTreeMap<&str, Vec<&str>> = d
        .records
        .iter()
        .map(|r| (r.source.as_str(), r.targets.iter().map(|t| t.domain.as_str()).collect()))
        .collect();
    let mut level: BTreeMap<String, u32> = seeds.iter().map(|s| (s.clone(), 0)).collect();
    let mut queue: VecDeque<String> = seeds.iter().cloned().collect();
    while let Some(u) = queue.pop_front() {
        let lu = level[&u];
        for &v in arcs.get(u.as_str()).into_iter().flatten() {
            if !level.contains_key(v) {
                level.insert(v.to_string(), lu + 1);
                queue.push_back(v.to_string());
            }
        }
    }
    level
}

#[test]
fn halo_shares_and_recovery() {
    let base = generate(&config(200, 0.05, 0.002, 1.0, 3)).unwrap();
    assert_eq!(plant_unlabeled_halo(&base, 0.0).unwrap(), base);
    for h in [0.5, 1.0, 2.0, 3.0] {
        let g = plant_unlabeled_halo(&base, h).unwrap();
        let share = g.labeled_count() as f64 / g.domains.len() as f64;
        assert!((share - 1.0 / (1.0 + h)).abs() <= 0.5 / g.domains.len() as f64);
        assert!(base.edges.iter().all(|e| g.edges.contains(e)));
    }

    let g = plant_unlabeled_halo(&base, 3.0).unwrap();
    let seeds = g.labeled_domains();
    let oracle = bfs_levels(&g, &seeds);
    let source = records(&g);
    let mut graph = MediaGraph::build_level0(&seeds, &source).unwrap();
    graph.expand_to(&source, 1).unwrap();
    let got: BTreeMap<String, u32> = graph.nodes().map(|n| (n.domain, n.level)).collect();
    let want: BTreeMap<String, u32> = oracle.into_iter().filter(|(_, l)| *l <= 2).collect();
    assert_eq!(got, want);
    let labeled: BTreeSet<String> = seeds.into_iter().collect();
    let halo_found = got.keys().filter(|d| !labeled.contains(*d)).count();
    assert!(halo_found > 0);
    assert!(graph.nodes().all(|n| n.is_seed == labeled.contains(&n.domain)));
}

fn planted_edges(d: &SynthDataset, keep: impl Fn(usize) -> bool) -> BTreeSet<(String, String)> {
    d.edges
        .iter()
        .filter(|e| keep(e.0) && keep(e.1))
        .map(|e| (d.domains[e.0].clone(), d.domains[e.1].clone()))
        .collect()
}

#[test]
fn replay_reconstructs_low_degree_graphs() {
    let mut exact_cases = 0;
    for seed in 0..10 {
        let d = generate(&config(200, 0.02, 0.002, 0.6, seed)).unwrap();
        let mut degree = vec![0usize; d.domains.len()];
        for e in &d.edges {
            degree[e.0] += 1;
            degree[e.1] += 1;
        }
        if degree.iter().any(|&k| k > 5) {
            continue;
        }
        exact_cases += 1;
        let seeds = d.labeled_domains();
        let labeled: BTreeSet<&String> = seeds.iter().collect();
        let source = records(&d);
        let mut graph = MediaGraph::build_level0(&seeds, &source).unwrap();
        graph.expand_to(&source, 2).unwrap();
        let induced: BTreeSet<(String, String)> = graph
            .edges()
            .filter(|e| labeled.contains(&e.a) && labeled.contains(&e.b))
            .map(|e| (e.a, e.b))
            .collect();
        let is_labeled = |i: usize| d.labels[i].factuality.is_some();
        assert_eq!(induced, planted_edges(&d, is_labeled));
        for e in graph.edges() {
            let (a, b) = (d.domains.binary_search(&e.a).unwrap(), d.domains.binary_search(&e.b).unwrap());
            let (u, v) = (a.min(b), a.max(b));
            let planted = d.edges.iter().find(|x| x.0 == u && x.1 == v).unwrap();
            assert_eq!(planted.2, e.score);
        }
    }
    assert!(exact_cases >= 3, "only {exact_cases} low-degree fixtures");

    // Everyone queried: the replay is the planted graph itself.
    let d = generate(&config(150, 0.02, 0.001, 1.0, 1)).unwrap();
    let source = records(&d);
    let graph = MediaGraph::build_level0(&d.domains, &source).unwrap();
    let all: BTreeSet<(String, String)> = graph.edges().map(|e| (e.a, e.b)).collect();
    let max_degree = (0..d.domains.len())
        .map(|v| d.edges.iter().filter(|e| e.0 == v || e.1 == v).count())
        .max()
        .unwrap();
    assert!(max_degree <= 5, "fixture degree {max_degree}");
    assert_eq!(all, planted_edges(&d, |_| true));
}

#[test]
fn truncation_loses_edges_at_high_degree() {
    let d = generate(&config(120, 0.3, 0.05, 1.0, 2)).unwrap();
    let source = records(&d);
    let graph = MediaGraph::build_level0(&d.domains, &source).unwrap();
    assert!(graph.edge_count() < d.edges.len());
}

#[test]
fn same_seed_same_dataset() {
    let c = config(300, 0.05, 0.002, 0.6, 9);
    let a = generate(&c).unwrap();
    let b = generate(&c).unwrap();
    assert_eq!(a, b);
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    let ha = plant_unlabeled_halo(&a, 1.5).unwrap();
    assert_eq!(ha, plant_unlabeled_halo(&b, 1.5).unwrap());
    let other = generate(&SynthConfig { seed: 10, ..c }).unwrap();
    assert_ne!(a.edges, other.edges);
}
