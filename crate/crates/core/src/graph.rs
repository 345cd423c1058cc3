//! Audience-overlap graph: domain normalization, level-wise construction from
//! overlap records, and the compact indexed view used by the learners.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sparse::CsrMatrix;

/// Canonical form of a site address: lowercase host without scheme, `www.`
/// prefix, credentials, port, path, query or fragment.
pub fn normalize_domain(raw: &str) -> Result<String> {
    let bad = || Error::InvalidDomain(raw.to_string());
    let mut s = raw.trim();
    if let Some(i) = s.find("://") {
        s = &s[i + 3..];
    }
    let end = s.find(['/', '?', '#']).unwrap_or(s.len());
    let mut host = &s[..end];
    if let Some(at) = host.rfind('@') {
        host = &host[at + 1..];
    }
    if let Some(colon) = host.find(':') {
        let port = &host[colon + 1..];
        if !port.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        host = &host[..colon];
    }
    let mut host = host.trim_end_matches('.').to_lowercase();
    // "www.com" is a registrable name, so only strip when a dot remains.
    while let Some(rest) = host.strip_prefix("www.") {
        if !rest.contains('.') {
            break;
        }
        host = rest.to_string();
    }
    if host.is_empty() {
        return Err(bad());
    }
    for label in host.split('.') {
        if label.is_empty()
            || !label
                .chars()
                .all(|c| c.is_alphanumeric() || c == '-' || c == '_')
        {
            return Err(bad());
        }
    }
    Ok(host)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainNode {
    pub domain: String,
    /// Number of query rounds between the seed list and the round that
    /// first discovered this node; 0 exactly for seeds.
    pub level: u32,
    pub is_seed: bool,
}

/// Undirected edge, endpoints stored with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEdge {
    pub a: String,
    pub b: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapTarget {
    pub domain: String,
    pub score: f64,
}

/// One answer of the overlap service: the sites most similar to `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub source: String,
    pub targets: Vec<OverlapTarget>,
}

impl OverlapRecord {
    pub const MAX_TARGETS: usize = 5;

    pub fn validate(&self) -> Result<()> {
        if self.targets.len() > Self::MAX_TARGETS {
            return Err(invalid!(
                "record for {} lists {} targets (max {})",
                self.source,
                self.targets.len(),
                Self::MAX_TARGETS
            ));
        }
        for t in &self.targets {
            if !t.score.is_finite() || t.score < 0.0 {
                return Err(invalid!(
                    "record for {} has invalid score {} for {}",
                    self.source,
                    t.score,
                    t.domain
                ));
            }
        }
        Ok(())
    }
}

/// Where overlap records come from. Implementations must be pure: asking
/// twice for the same domain yields the same record.
pub trait RecordSource {
    fn record(&self, domain: &str) -> Option<OverlapRecord>;
}

/// In-memory record table keyed by normalized source domain. Backs both
/// fixture replay and synthetic generation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordMap {
    records: BTreeMap<String, OverlapRecord>,
}

impl RecordMap {
    /// Normalizes and validates every record. Repeated sources are merged,
    /// keeping the highest score per target.
    pub fn from_records(records: impl IntoIterator<Item = OverlapRecord>) -> Result<Self> {
        let mut map: BTreeMap<String, OverlapRecord> = BTreeMap::new();
        for rec in records {
            rec.validate()?;
            let source = normalize_domain(&rec.source)?;
            let mut targets = Vec::with_capacity(rec.targets.len());
            for t in rec.targets {
                targets.push(OverlapTarget {
                    domain: normalize_domain(&t.domain)?,
                    score: t.score,
                });
            }
            match map.get_mut(&source) {
                Some(existing) => {
                    log::warn!("duplicate overlap record for {source}; merging");
                    for t in targets {
                        match existing.targets.iter_mut().find(|e| e.domain == t.domain) {
                            Some(e) => e.score = e.score.max(t.score),
                            None => existing.targets.push(t),
                        }
                    }
                }
                None => {
                    map.insert(source.clone(), OverlapRecord { source, targets });
                }
            }
        }
        Ok(RecordMap { records: map })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &OverlapRecord> {
        self.records.values()
    }
}

impl RecordSource for RecordMap {
    fn record(&self, domain: &str) -> Option<OverlapRecord> {
        self.records.get(domain).cloned()
    }
}

impl<S: RecordSource + ?Sized> RecordSource for &S {
    fn record(&self, domain: &str) -> Option<OverlapRecord> {
        (**self).record(domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct NodeMeta {
    level: u32,
    is_seed: bool,
}

/// Weighted undirected graph of domains. Storage is keyed by domain name, so
/// two graphs built from the same inputs compare equal whatever order the
/// inputs were processed in.
#[derive(Debug, Clone, Default)]
pub struct MediaGraph {
    nodes: BTreeMap<String, NodeMeta>,
    edges: BTreeMap<(String, String), f64>,
    queried: BTreeSet<String>,
    max_level: u32,
}

impl PartialEq for MediaGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.max_level == other.max_level
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// Node count per level tag.
    pub per_level: BTreeMap<u32, usize>,
}

impl MediaGraph {
    /// Level-0 graph: every seed, plus each seed's overlap targets. Targets
    /// that are seeds themselves stay at level 0; the rest are tagged level 1
    /// and queried by the first [`expand_level`](Self::expand_level) round.
    pub fn build_level0<S: RecordSource>(seeds: &[String], source: &S) -> Result<Self> {
        let mut normalized = BTreeSet::new();
        for s in seeds {
            normalized.insert(normalize_domain(s)?);
        }
        if normalized.is_empty() {
            return Err(invalid!("seed list is empty"));
        }
        let mut graph = MediaGraph::default();
        for s in &normalized {
            graph.nodes.insert(
                s.clone(),
                NodeMeta {
                    level: 0,
                    is_seed: true,
                },
            );
        }
        let mut missing = 0usize;
        for s in &normalized {
            if !graph.query(s, source, 1) {
                missing += 1;
            }
        }
        if missing > 0 {
            log::info!("level 0: {missing} seeds without an overlap record");
        }
        Ok(graph)
    }

    /// Round `k`: queries every node not yet queried (the nodes discovered
    /// in round `k - 1`); newly found targets are tagged level `k + 1`.
    pub fn expand_level<S: RecordSource>(&mut self, source: &S, k: u32) -> Result<()> {
        if k == 0 || self.max_level != k - 1 {
            return Err(invalid!(
                "cannot expand to level {k} from a level-{} graph",
                self.max_level
            ));
        }
        let frontier: Vec<String> = self
            .nodes
            .keys()
            .filter(|d| !self.queried.contains(*d))
            .cloned()
            .collect();
        let mut missing = 0usize;
        for d in &frontier {
            if !self.query(d, source, k + 1) {
                missing += 1;
            }
        }
        if missing > 0 {
            log::info!(
                "level {k}: {missing} of {} frontier nodes without an overlap record",
                frontier.len()
            );
        }
        self.max_level = k;
        Ok(())
    }

    /// Expands round by round until `max_level` is reached.
    pub fn expand_to<S: RecordSource>(&mut self, source: &S, max_level: u32) -> Result<()> {
        while self.max_level < max_level {
            let next = self.max_level + 1;
            self.expand_level(source, next)?;
        }
        Ok(())
    }

    fn query<S: RecordSource>(&mut self, domain: &str, source: &S, new_level: u32) -> bool {
        self.queried.insert(domain.to_string());
        let Some(record) = source.record(domain) else {
            log::debug!("no overlap record for {domain}");
            return false;
        };
        for t in &record.targets {
            let target = match normalize_domain(&t.domain) {
                Ok(d) => d,
                Err(_) => {
                    log::warn!("skipping unparsable target {:?} of {domain}", t.domain);
                    continue;
                }
            };
            if target == domain {
                continue;
            }
            self.nodes.entry(target.clone()).or_insert(NodeMeta {
                level: new_level,
                is_seed: false,
            });
            self.upsert_edge(domain, &target, t.score);
        }
        true
    }

    fn upsert_edge(&mut self, a: &str, b: &str, score: f64) {
        if a == b || !(score > 0.0) || !score.is_finite() {
            return;
        }
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.edges
            .entry(key)
            .and_modify(|s| {
                if score > *s {
                    *s = score;
                }
            })
            .or_insert(score);
    }

    /// Reassembles a graph from serialized parts. `max_level` defaults to
    /// the highest level whose nodes must have been queried, i.e. one below
    /// the deepest level tag present.
    pub fn from_parts(
        nodes: Vec<DomainNode>,
        edges: Vec<OverlapEdge>,
        max_level: Option<u32>,
    ) -> Result<Self> {
        let mut graph = MediaGraph::default();
        for n in nodes {
            let domain = normalize_domain(&n.domain)?;
            if (n.level == 0) != n.is_seed {
                return Err(invalid!(
                    "node {domain}: level {} inconsistent with is_seed={}",
                    n.level,
                    n.is_seed
                ));
            }
            if graph
                .nodes
                .insert(
                    domain.clone(),
                    NodeMeta {
                        level: n.level,
                        is_seed: n.is_seed,
                    },
                )
                .is_some()
            {
                return Err(invalid!("duplicate node {domain}"));
            }
        }
        for e in edges {
            let a = normalize_domain(&e.a)?;
            let b = normalize_domain(&e.b)?;
            if a == b {
                return Err(invalid!("self-loop on {a}"));
            }
            for d in [&a, &b] {
                if !graph.nodes.contains_key(d) {
                    return Err(invalid!("edge endpoint {d} is not a node"));
                }
            }
            if !(e.score > 0.0) || !e.score.is_finite() {
                return Err(invalid!("edge {a}-{b} has invalid score {}", e.score));
            }
            graph.upsert_edge(&a, &b, e.score);
        }
        let deepest = graph.nodes.values().map(|m| m.level).max().unwrap_or(0);
        graph.max_level = max_level.unwrap_or(deepest.saturating_sub(1));
        let cutoff = graph.max_level;
        graph.queried = graph
            .nodes
            .iter()
            .filter(|(_, m)| m.level <= cutoff)
            .map(|(d, _)| d.clone())
            .collect();
        Ok(graph)
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.nodes.contains_key(domain)
    }

    pub fn node(&self, domain: &str) -> Option<DomainNode> {
        self.nodes.get(domain).map(|m| DomainNode {
            domain: domain.to_string(),
            level: m.level,
            is_seed: m.is_seed,
        })
    }

    /// Nodes in lexicographic domain order.
    pub fn nodes(&self) -> impl Iterator<Item = DomainNode> + '_ {
        self.nodes.iter().map(|(d, m)| DomainNode {
            domain: d.clone(),
            level: m.level,
            is_seed: m.is_seed,
        })
    }

    /// Edges sorted by `(a, b)`.
    pub fn edges(&self) -> impl Iterator<Item = OverlapEdge> + '_ {
        self.edges.iter().map(|((a, b), s)| OverlapEdge {
            a: a.clone(),
            b: b.clone(),
            score: *s,
        })
    }

    pub fn edge_score(&self, a: &str, b: &str) -> Option<f64> {
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        self.edges.get(&key).copied()
    }

    pub fn stats(&self) -> GraphStats {
        let mut per_level = BTreeMap::new();
        for m in self.nodes.values() {
            *per_level.entry(m.level).or_insert(0) += 1;
        }
        GraphStats {
            node_count: self.nodes.len(),
            edge_count: self.edges.len(),
            per_level,
        }
    }

    /// Indexed view with nodes in lexicographic order.
    pub fn indexed(&self) -> IndexedGraph {
        let order: Vec<String> = self.nodes.keys().cloned().collect();
        self.indexed_with(&order)
            .expect("node keys form a valid ordering")
    }

    /// Indexed view with an explicit ordering; `order` must list every node
    /// exactly once.
    pub fn indexed_with(&self, order: &[String]) -> Result<IndexedGraph> {
        if order.len() != self.nodes.len() {
            return Err(invalid!(
                "ordering has {} entries for {} nodes",
                order.len(),
                self.nodes.len()
            ));
        }
        let mut index = BTreeMap::new();
        for (i, d) in order.iter().enumerate() {
            if !self.nodes.contains_key(d) {
                return Err(invalid!("ordering names unknown node {d}"));
            }
            if index.insert(d.as_str(), i).is_some() {
                return Err(invalid!("ordering lists {d} twice"));
            }
        }
        let edges = self
            .edges
            .iter()
            .map(|((a, b), s)| (index[a.as_str()], index[b.as_str()], *s));
        IndexedGraph::from_edges(order.to_vec(), edges)
    }
}

/// Whether graph learners see overlap scores or plain connectivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeighting {
    #[default]
    Score,
    Binary,
}

/// Compressed adjacency over `0..n`. Neighbor lists are sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedGraph {
    domains: Vec<String>,
    /// Position of each node in lexicographic domain order.
    rank: Vec<usize>,
    by_name: Vec<usize>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
}

impl IndexedGraph {
    /// Builds from an edge list; duplicate pairs keep the highest weight and
    /// self-loops are rejected.
    pub fn from_edges(
        domains: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = domains.len();
        let mut by_name: Vec<usize> = (0..n).collect();
        by_name.sort_by(|&a, &b| domains[a].cmp(&domains[b]));
        for w in by_name.windows(2) {
            if domains[w[0]] == domains[w[1]] {
                return Err(invalid!("duplicate domain {}", domains[w[0]]));
            }
        }
        let mut rank = alloc::vec![0; n];
        for (r, &i) in by_name.iter().enumerate() {
            rank[i] = r;
        }
        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(invalid!("edge ({a}, {b}) out of range for {n} nodes"));
            }
            if a == b {
                return Err(invalid!("self-loop on node {a}"));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(invalid!("edge ({a}, {b}) has invalid weight {w}"));
            }
            for key in [(a, b), (b, a)] {
                pairs
                    .entry(key)
                    .and_modify(|x| *x = x.max(w))
                    .or_insert(w);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        offsets.push(0);
        let mut it = pairs.into_iter().peekable();
        for v in 0..n {
            while let Some(((a, b), w)) = it.next_if(|((a, _), _)| *a == v) {
                debug_assert_eq!(a, v);
                neighbors.push(b);
                weights.push(w);
            }
            offsets.push(neighbors.len());
        }
        Ok(IndexedGraph {
            domains,
            rank,
            by_name,
            offsets,
            neighbors,
            weights,
        })
    }

    /// Graph over nodes named `v0000000, v0000001, ...`, so lexicographic and
    /// index order coincide.
    pub fn anonymous(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let domains = (0..n).map(|i| format!("v{i:07}")).collect();
        Self::from_edges(domains, edges)
    }

    pub fn node_count(&self) -> usize {
        self.domains.len()
    }

    /// Undirected edge count.
    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn domains(&self) -> &[String] {
        &self.domains
    }

    pub fn domain(&self, v: usize) -> &str {
        &self.domains[v]
    }

    pub fn index_of(&self, domain: &str) -> Option<usize> {
        self.by_name
            .binary_search_by(|&i| self.domains[i].as_str().cmp(domain))
            .ok()
            .map(|pos| self.by_name[pos])
    }

    pub fn canonical_rank(&self, v: usize) -> usize {
        self.rank[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbor_weights(&self, v: usize) -> &[f64] {
        &self.weights[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Global slot of the directed edge `u -> v`, usable as a dense key for
    /// per-edge caches of size `2 * edge_count()`.
    pub fn edge_slot(&self, u: usize, v: usize) -> Option<usize> {
        self.neighbors(u)
            .binary_search(&v)
            .ok()
            .map(|i| self.offsets[u] + i)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_slot(u, v).is_some()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edge_slot(u, v).map(|s| self.weights[s])
    }

    /// Iterates `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.node_count()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| u < v)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    /// Symmetric GCN propagation matrix `D^-1/2 (A + I) D^-1/2`, where `D`
    /// is the degree matrix of `A + I`. Entries within a row are ordered by
    /// domain name, so relabeling the nodes permutes the result without
    /// changing any floating-point sum.
    pub fn normalized_adjacency(&self, weighting: EdgeWeighting) -> CsrMatrix {
        let n = self.node_count();
        let weight = |w: f64| match weighting {
            EdgeWeighting::Score => w,
            EdgeWeighting::Binary => 1.0,
        };
        let mut rows: Vec<Vec<(usize, usize, f64)>> = Vec::with_capacity(n);
        for v in 0..n {
            let mut row: Vec<(usize, usize, f64)> = self
                .neighbors(v)
                .iter()
                .zip(self.neighbor_weights(v))
                .map(|(&u, &w)| (self.rank[u], u, weight(w)))
                .collect();
            row.push((self.rank[v], v, 1.0));
            row.sort_by_key(|e| e.0);
            rows.push(row);
        }
        let degree: Vec<f64> = rows
            .iter()
            .map(|row| row.iter().map(|e| e.2).sum::<f64>())
            .collect();
        let mut triplets = Vec::with_capacity(self.neighbors.len() + n);
        for (v, row) in rows.iter().enumerate() {
            for &(_, u, w) in row {
                triplets.push((v, u, w / libm::sqrt(degree[v] * degree[u])));
            }
        }
        CsrMatrix::from_row_triplets(n, n, triplets)
    }
}
