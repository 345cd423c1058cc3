//! Snapshot of the report rendering. Regenerate with `UPDATE_GOLDEN=1`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mediaprof::report::ReportDocument;
use mediaprof_core::eval::{EvalReport, Task};
use mediaprof_core::graph::GraphStats;

fn report(system: &str, folds: &[(Vec<usize>, Vec<usize>)]) -> EvalReport {
    EvalReport::from_folds(Task::Factuality, system, folds, 3).unwrap()
}

fn three_reports() -> ReportDocument {
    let y = vec![0, 0, 1, 1, 2, 2];
    let a = report("node2vec", &[(y.clone(), vec![0, 0, 1, 1, 2, 1]), (y.clone(), vec![0, 0, 1, 1, 2, 2])]);
    let mut b = report("gcn", &[(y.clone(), vec![0, 1, 1, 1, 2, 2]), (y.clone(), vec![0, 0, 1, 2, 2, 2])]);
    b.hyperparameters = vec![BTreeMap::from([("c".to_string(), 10.0), ("gamma".to_string(), 0.01)]); 2];
    let c = report("majority", &[(y.clone(), vec![0; 6]), (y, vec![0; 6])]);
    let graph = GraphStats {
        node_count: 40,
        edge_count: 77,
        per_level: BTreeMap::from([(0, 12), (1, 20), (2, 8)]),
    };
    ReportDocument::new(Task::Factuality, 42, 12, Some(graph), true, vec![c, a, b])
}

fn check(name: &str, actual: &[u8]) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read(&path).unwrap();
    assert_eq!(
        String::from_utf8_lossy(actual),
        String::from_utf8_lossy(&expected),
        "{name} differs from the snapshot"
    );
}

#[test]
fn three_report_render_matches_snapshot() {
    let doc = three_reports();
    let order: Vec<&str> = doc.systems.iter().map(|s| s.system.as_str()).collect();
    assert_eq!(order, ["node2vec", "gcn", "majority"]);
    check("three_reports.txt", doc.render_text().as_bytes());
    check("three_reports.json", &doc.to_json());
    let back: ReportDocument = serde_json::from_slice(&doc.to_json()).unwrap();
    assert_eq!(back, doc);
}
