use std::fs;

use mediaprof::io::*;
use mediaprof::Error;
use mediaprof_core::eval::Task;
use mediaprof_core::features::{NodeFeatures, RawMetrics};
use mediaprof_core::gnn::{GnnModel, GnnVariant};
use mediaprof_core::graph::{MediaGraph, OverlapRecord, OverlapTarget, RecordMap};
use ndarray::array;

fn rec(source: &str, targets: &[(&str, f64)]) -> OverlapRecord {
    OverlapRecord {
        source: source.into(),
        targets: targets
            .iter()
            .map(|&(d, s)| OverlapTarget {
                domain: d.into(),
                score: s,
            })
            .collect(),
    }
}

fn records() -> Vec<OverlapRecord> {
    vec![
        rec("a.com", &[("b.com", 30.5), ("c.com", 12.0)]),
        rec("b.com", &[("a.com", 41.0), ("d.com", 20.25)]),
        rec("d.com", &[("e.com", 15.0)]),
    ]
}

#[test]
fn records_roundtrip_and_report_lines() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("records.jsonl");
    write_records(&p, &records()).unwrap();
    assert_eq!(read_records(&p).unwrap(), records());

    let mut text = fs::read_to_string(&p).unwrap();
    text.push_str("\n{\"source\": \"x.com\", \"targets\": [{\"domain\": \"y.com\", \"score\": -1}]}\n");
    fs::write(&p, text).unwrap();
    match read_records(&p) {
        Err(Error::Format { line, .. }) => assert_eq!(line, 5),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn graph_roundtrip_keeps_levels_and_depth() {
    let source = RecordMap::from_records(records()).unwrap();
    let mut g = MediaGraph::build_level0(&["a.com".to_string()], &source).unwrap();
    g.expand_to(&source, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (n, e) = (dir.path().join("nodes.csv"), dir.path().join("edges.csv"));
    write_graph(&n, &e, &g).unwrap();
    let back = read_graph(&n, &e, Some(g.max_level())).unwrap();
    assert_eq!(back, g);
    assert_eq!(read_graph(&n, &e, None).unwrap().max_level(), g.max_level());

    fs::write(&e, "domain_a,domain_b,score\nb.com,a.com,3\n").unwrap();
    assert!(matches!(read_graph(&n, &e, None), Err(Error::Format { line: 2, .. })));
}

#[test]
fn raw_features_keep_blanks() {
    let rows = vec![
        (
            "a.com".to_string(),
            RawMetrics {
                rank: Some("1234".into()),
                sites_linking_in: Some("56".into()),
                bounce_rate: None,
                daily_pageviews: Some("2.5".into()),
                daily_time: Some("3:21".into()),
            },
        ),
        ("b.com".to_string(), RawMetrics::default()),
    ];
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("features.csv");
    write_features(&p, &rows).unwrap();
    assert_eq!(read_features(&p).unwrap(), rows);

    fs::write(&p, "domain,rank,sites_linking_in,bounce_rate,daily_pageviews,daily_time\nA.com,,,,,\na.com,,,,,\n").unwrap();
    assert!(read_features(&p).is_err(), "duplicate after normalization");
}

#[test]
fn feature_table_roundtrip() {
    let raw = RawMetrics {
        rank: Some("100".into()),
        ..Default::default()
    };
    let feats = vec![NodeFeatures::from_raw(&raw), NodeFeatures::empty()];
    let domains = vec!["a.com".to_string(), "b.com".to_string()];
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("imputed.csv");
    write_feature_table(&p, &domains, &feats).unwrap();
    let (d, x) = read_feature_table(&p).unwrap();
    assert_eq!(d, domains);
    for (row, f) in x.rows().into_iter().zip(&feats) {
        assert_eq!(row.to_vec(), f.feature_vector().to_vec());
    }
}

#[test]
fn labels_roundtrip_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("labels.csv");
    fs::write(&p, "domain,factuality,bias\nA.com,high,left\nb.com,,centre\nc.com,low,\nd.com,,\n").unwrap();
    let t = read_labels(&p).unwrap();
    assert_eq!(t.get("a.com", Task::Factuality), Task::Factuality.class_index("high"));
    assert_eq!(t.get("b.com", Task::Factuality), None);
    assert_eq!(t.for_task(Task::Bias).len(), 2);
    assert_eq!(t.seeds(), vec!["a.com", "b.com", "c.com"]);

    let q = dir.path().join("again.csv");
    write_labels(&q, &t).unwrap();
    assert_eq!(read_labels(&q).unwrap(), t);

    fs::write(&p, "domain,factuality,bias\na.com,high,left\nb.com,very-high,\n").unwrap();
    match read_labels(&p) {
        Err(Error::Format { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("very-high"), "{message}");
        }
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn matrix_roundtrip_and_channel_alignment() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.csv");
    let domains = vec!["a.com".to_string(), "b.com".to_string()];
    let m = array![[0.1, -2.0, 3.5e-9], [1.0, 0.0, 1e300]];
    write_matrix_csv(&p, "e", &domains, &m).unwrap();
    let rows = read_matrix_csv(&p, "e").unwrap();
    assert_eq!(rows[0], ("a.com".to_string(), vec![0.1, -2.0, 3.5e-9]));
    assert_eq!(rows[1].1, vec![1.0, 0.0, 1e300]);
    assert!(read_matrix_csv(&p, "v").is_err(), "prefix is part of the header");

    // External channel covering two of five graph nodes.
    let ext = dir.path().join("wiki.csv");
    fs::write(&ext, "domain,v0,v1\nWWW.C.com,1,2\na.com,3,4\n").unwrap();
    let order: Vec<String> = ["a.com", "b.com", "c.com", "d.com", "e.com"].map(String::from).to_vec();
    let ch = ingest_external_representation(&ext, "wiki", &order).unwrap();
    assert_eq!(ch.coverage, vec![true, false, true, false, false]);
    assert_eq!(ch.matrix, array![[3.0, 4.0], [0.0, 0.0], [1.0, 2.0], [0.0, 0.0], [0.0, 0.0]]);

    fs::write(&ext, "domain,v0\nzzz.com,1\n").unwrap();
    let err = ingest_external_representation(&ext, "wiki", &order).unwrap_err();
    assert!(err.to_string().contains("zzz.com"), "{err}");
    fs::write(&ext, "domain,v0\na.com,NaN\n").unwrap();
    assert!(ingest_external_representation(&ext, "wiki", &order).is_err());
}

#[test]
fn checkpoint_roundtrip_is_lossless() {
    for variant in [GnnVariant::Gcn, GnnVariant::Sage] {
        let model = GnnModel::init(variant, 9, 6, 2, 3, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        write_checkpoint(&p, &model).unwrap();
        assert_eq!(read_checkpoint(&p).unwrap(), model);
    }
}
