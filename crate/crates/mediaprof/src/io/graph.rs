use std::path::Path;

use mediaprof_core::graph::{DomainNode, MediaGraph, OverlapEdge};
use serde::{Deserialize, Serialize};

use super::{csv_reader, csv_writer, expect_headers, finish_csv, line_of};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct NodeRow {
    domain: String,
    level: u32,
    is_seed: bool,
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    domain_a: String,
    domain_b: String,
    score: f64,
}

/// `nodes.csv` (domain, level, is_seed) and `edges.csv` (domain_a,
/// domain_b, score) with `domain_a < domain_b`, both sorted.
pub fn write_graph(nodes_path: &Path, edges_path: &Path, graph: &MediaGraph) -> Result<()> {
    let mut w = csv_writer();
    for n in graph.nodes() {
        w.serialize(NodeRow {
            domain: n.domain,
            level: n.level,
            is_seed: n.is_seed,
        })
        .map_err(|e| Error::csv(nodes_path, e))?;
    }
    if graph.node_count() == 0 {
        w.write_record(["domain", "level", "is_seed"])
            .map_err(|e| Error::csv(nodes_path, e))?;
    }
    finish_csv(nodes_path, w)?;

    let mut w = csv_writer();
    for e in graph.edges() {
        w.serialize(EdgeRow {
            domain_a: e.a,
            domain_b: e.b,
            score: e.score,
        })
        .map_err(|e| Error::csv(edges_path, e))?;
    }
    if graph.edge_count() == 0 {
        w.write_record(["domain_a", "domain_b", "score"])
            .map_err(|e| Error::csv(edges_path, e))?;
    }
    finish_csv(edges_path, w)
}

/// The CSV pair does not store the expansion depth. Without `max_level` it
/// is taken as one below the deepest level tag, which is what a level-wise
/// build produces unless its last round discovered nothing.
pub fn read_graph(
    nodes_path: &Path,
    edges_path: &Path,
    max_level: Option<u32>,
) -> Result<MediaGraph> {
    let mut r = csv_reader(nodes_path)?;
    expect_headers(nodes_path, &mut r, &["domain", "level", "is_seed"])?;
    let mut nodes = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(nodes_path, e))?;
        let row: NodeRow = rec
            .deserialize(None)
            .map_err(|e| Error::format(nodes_path, line_of(&rec), e.to_string()))?;
        nodes.push(DomainNode {
            domain: row.domain,
            level: row.level,
            is_seed: row.is_seed,
        });
    }
    let mut r = csv_reader(edges_path)?;
    expect_headers(edges_path, &mut r, &["domain_a", "domain_b", "score"])?;
    let mut edges = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(edges_path, e))?;
        let line = line_of(&rec);
        let row: EdgeRow = rec
            .deserialize(None)
            .map_err(|e| Error::format(edges_path, line, e.to_string()))?;
        if row.domain_a >= row.domain_b {
            return Err(Error::format(
                edges_path,
                line,
                format!("expected domain_a < domain_b, got {} / {}", row.domain_a, row.domain_b),
            ));
        }
        edges.push(OverlapEdge {
            a: row.domain_a,
            b: row.domain_b,
            score: row.score,
        });
    }
    Ok(MediaGraph::from_parts(nodes, edges, max_level)?)
}
