use std::collections::BTreeSet;
use std::path::Path;

use mediaprof_core::features::{NodeFeatures, RawMetrics, FEATURE_DIM, FEATURE_NAMES};
use mediaprof_core::graph::normalize_domain;
use ndarray::Array2;

use super::{csv_reader, csv_writer, expect_headers, finish_csv, line_of};
use crate::error::{Error, Result};

const RAW_HEADER: [&str; 6] = [
    "domain",
    "rank",
    "sites_linking_in",
    "bounce_rate",
    "daily_pageviews",
    "daily_time",
];

/// Raw metric cells by normalized domain; empty cells are `None`. Cell text
/// is kept verbatim for the parsers in the core crate.
pub fn read_features(path: &Path) -> Result<Vec<(String, RawMetrics)>> {
    let mut r = csv_reader(path)?;
    expect_headers(path, &mut r, &RAW_HEADER)?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        if rec.len() != RAW_HEADER.len() {
            return Err(Error::format(path, line, format!("expected 6 cells, got {}", rec.len())));
        }
        let domain = normalize_domain(&rec[0]).map_err(|e| Error::format(path, line, e.to_string()))?;
        if !seen.insert(domain.clone()) {
            return Err(Error::format(path, line, format!("duplicate domain {domain}")));
        }
        let cell = |i: usize| Some(rec[i].to_string()).filter(|s| !s.is_empty());
        out.push((
            domain,
            RawMetrics {
                rank: cell(1),
                sites_linking_in: cell(2),
                bounce_rate: cell(3),
                daily_pageviews: cell(4),
                daily_time: cell(5),
            },
        ));
    }
    Ok(out)
}

pub fn write_features(path: &Path, rows: &[(String, RawMetrics)]) -> Result<()> {
    let mut w = csv_writer();
    w.write_record(RAW_HEADER).map_err(|e| Error::csv(path, e))?;
    for (domain, m) in rows {
        let cell = |c: &Option<String>| c.clone().unwrap_or_default();
        w.write_record([
            domain.clone(),
            cell(&m.rank),
            cell(&m.sites_linking_in),
            cell(&m.bounce_rate),
            cell(&m.daily_pageviews),
            cell(&m.daily_time),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

/// Nine-column feature vectors (`rank_log` ... `has_daily_pageviews`).
pub fn write_feature_table(path: &Path, domains: &[String], features: &[NodeFeatures]) -> Result<()> {
    let mut w = csv_writer();
    let header: Vec<&str> = std::iter::once("domain").chain(FEATURE_NAMES).collect();
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (d, f) in domains.iter().zip(features) {
        let mut row = vec![d.clone()];
        row.extend(f.feature_vector().iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

pub fn read_feature_table(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let mut r = csv_reader(path)?;
    let header: Vec<&str> = std::iter::once("domain").chain(FEATURE_NAMES).collect();
    expect_headers(path, &mut r, &header)?;
    let mut domains = Vec::new();
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        if rec.len() != FEATURE_DIM + 1 {
            return Err(Error::format(path, line, "wrong number of cells"));
        }
        domains.push(rec[0].to_string());
        for cell in rec.iter().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::format(path, line, format!("not a number: {cell:?}")))?;
            values.push(v);
        }
    }
    let n = domains.len();
    let matrix = Array2::from_shape_vec((n, FEATURE_DIM), values).expect("rows checked");
    Ok((domains, matrix))
}
