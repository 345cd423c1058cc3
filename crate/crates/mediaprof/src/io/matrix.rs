use std::path::Path;

use mediaprof_core::classify::RepresentationChannel;
use mediaprof_core::graph::normalize_domain;
use ndarray::Array2;

use super::{csv_reader, csv_writer, finish_csv, line_of};
use crate::error::{Error, Result};

/// `domain, {prefix}0 .. {prefix}{d-1}`: `e` for embeddings, `v` for
/// channel files. Values use the shortest round-trip decimal form.
pub fn write_matrix_csv(path: &Path, prefix: &str, domains: &[String], m: &Array2<f64>) -> Result<()> {
    assert_eq!(domains.len(), m.nrows(), "one domain per row");
    let mut w = csv_writer();
    let header: Vec<String> = std::iter::once("domain".to_string())
        .chain((0..m.ncols()).map(|j| format!("{prefix}{j}")))
        .collect();
    w.write_record(&header).map_err(|e| Error::csv(path, e))?;
    for (d, row) in domains.iter().zip(m.rows()) {
        let mut cells = Vec::with_capacity(row.len() + 1);
        cells.push(d.clone());
        cells.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&cells).map_err(|e| Error::csv(path, e))?;
    }
    finish_csv(path, w)
}

/// Rows in file order. The header must be `domain, {prefix}0, ...`.
pub fn read_matrix_csv(path: &Path, prefix: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv_reader(path)?;
    let headers = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let ok = headers.get(0) == Some("domain")
        && headers
            .iter()
            .skip(1)
            .enumerate()
            .all(|(j, h)| h == format!("{prefix}{j}"));
    if !ok {
        return Err(Error::format(
            path,
            1,
            format!("expected header `domain,{prefix}0,{prefix}1,...`"),
        ));
    }
    let dim = headers.len() - 1;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        if rec.len() != dim + 1 {
            return Err(Error::format(
                path,
                line,
                format!("expected {dim} values, got {}", rec.len().saturating_sub(1)),
            ));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::format(path, line, format!("not a finite number: {c:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push((rec[0].to_string(), values));
    }
    Ok(out)
}

/// Reads a channel file and aligns it to `order`. Domains absent from the
/// file get zero rows with coverage off; domains not in `order` are an
/// error listing them.
pub fn ingest_external_representation(
    path: &Path,
    name: &str,
    order: &[String],
) -> Result<RepresentationChannel> {
    let rows = read_matrix_csv(path, "v")?
        .into_iter()
        .map(|(d, v)| {
            let d = normalize_domain(&d).map_err(|e| Error::format(path, 0, e.to_string()))?;
            Ok((d, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let channel = RepresentationChannel::align(name, order, &rows).map_err(|e| Error::Format {
        path: path.into(),
        line: 0,
        message: e.to_string(),
    })?;
    let missing = channel.coverage.iter().filter(|c| !**c).count();
    if missing > 0 {
        log::info!("channel {name}: {missing} domains without a vector use zeros");
    }
    Ok(channel)
}
