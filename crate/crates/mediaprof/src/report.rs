//! Final report: versioned JSON plus a plain-text table.

use std::fmt::Write as _;

use mediaprof_core::eval::{render_table, EvalReport, Task};
use mediaprof_core::graph::GraphStats;
use serde::{Deserialize, Serialize};

use crate::manifest::TOOL_VERSION;

/// Bumped on any incompatible change to [`ReportDocument`].
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub tool_version: String,
    pub task: Task,
    pub master_seed: u64,
    pub labeled_nodes: usize,
    pub graph: Option<GraphStats>,
    pub leakage_ok: bool,
    /// Sorted by mean macro-F1 descending, then system name.
    pub systems: Vec<EvalReport>,
}

impl ReportDocument {
    pub fn new(
        task: Task,
        master_seed: u64,
        labeled_nodes: usize,
        graph: Option<GraphStats>,
        leakage_ok: bool,
        mut systems: Vec<EvalReport>,
    ) -> Self {
        systems.sort_by(|a, b| {
            b.mean_macro_f1
                .total_cmp(&a.mean_macro_f1)
                .then_with(|| a.system.cmp(&b.system))
        });
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            task,
            master_seed,
            labeled_nodes,
            graph,
            leakage_ok,
            systems,
        }
    }

    pub fn system(&self, name: &str) -> Option<&EvalReport> {
        self.systems.iter().find(|r| r.system == name)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mediaprof {} report (schema {})", self.tool_version, self.schema_version);
        let _ = writeln!(out, "seed: {}", self.master_seed);
        let _ = writeln!(out, "labeled nodes: {}", self.labeled_nodes);
        if let Some(g) = &self.graph {
            let levels: Vec<String> = g.per_level.iter().map(|(l, n)| format!("L{l}={n}")).collect();
            let _ = writeln!(
                out,
                "graph: {} nodes, {} edges ({})",
                g.node_count,
                g.edge_count,
                levels.join(" ")
            );
        }
        let _ = writeln!(out, "leakage check: {}", if self.leakage_ok { "passed" } else { "FAILED" });
        out.push('\n');
        out.push_str(&render_table(&self.systems));
        out
    }
}
