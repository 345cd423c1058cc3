//! Site engagement metrics: parsing, presence flags, and graph-neighborhood
//! imputation of missing values.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::IndexedGraph;

pub const METRIC_COUNT: usize = 5;
pub const FEATURE_DIM: usize = 9;

/// Scalar metrics in feature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    RankLog = 0,
    SitesLinkingIn = 1,
    BounceRate = 2,
    DailyPageviews = 3,
    DailyTime = 4,
}

impl Metric {
    pub const ALL: [Metric; METRIC_COUNT] = [
        Metric::RankLog,
        Metric::SitesLinkingIn,
        Metric::BounceRate,
        Metric::DailyPageviews,
        Metric::DailyTime,
    ];
}

/// Metrics that carry a binary availability flag, in flag order.
pub const FLAGGED: [Metric; 4] = [
    Metric::SitesLinkingIn,
    Metric::BounceRate,
    Metric::DailyTime,
    Metric::DailyPageviews,
];

pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "rank_log",
    "sites_linking_in",
    "bounce_rate",
    "daily_pageviews",
    "daily_time_s",
    "has_sites_linking_in",
    "has_bounce_rate",
    "has_daily_time",
    "has_daily_pageviews",
];

pub fn log_scale_rank(rank: u64) -> Result<f64> {
    if rank < 1 {
        return Err(invalid!("traffic rank must be >= 1, got {rank}"));
    }
    Ok(libm::log10(rank as f64))
}

/// Parses `M:SS` or `H:MM:SS` into seconds.
pub fn parse_time_on_site(text: &str) -> Result<f64> {
    let err = || Error::Parse(alloc::format!("bad time on site {text:?}"));
    let parts: Vec<&str> = text.trim().split(':').collect();
    let field = |s: &str, two_digits: bool| -> Result<u64> {
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) || (two_digits && s.len() != 2)
        {
            return Err(err());
        }
        s.parse::<u64>().map_err(|_| err())
    };
    let seconds = match parts.as_slice() {
        [m, s] => {
            let (m, s) = (field(m, false)?, field(s, true)?);
            if s >= 60 {
                return Err(err());
            }
            m * 60 + s
        }
        [h, m, s] => {
            let (h, m, s) = (field(h, false)?, field(m, true)?, field(s, true)?);
            if m >= 60 || s >= 60 {
                return Err(err());
            }
            h * 3600 + m * 60 + s
        }
        _ => return Err(err()),
    };
    Ok(seconds as f64)
}

/// Metric cells as supplied by the source; `None` means the cell was empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawMetrics {
    pub rank: Option<String>,
    pub sites_linking_in: Option<String>,
    pub bounce_rate: Option<String>,
    pub daily_pageviews: Option<String>,
    pub daily_time: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFeatures {
    /// Scalar metrics in [`Metric`] order; 0.0 where missing.
    pub values: [f64; METRIC_COUNT],
    pub missing: [bool; METRIC_COUNT],
    /// Original availability of the [`FLAGGED`] metrics. Never touched by
    /// imputation.
    pub flags: [bool; 4],
}

fn parse_count(s: &str) -> Option<f64> {
    let v: f64 = s.trim().replace(',', "").parse().ok()?;
    (v.is_finite() && v >= 0.0).then_some(v)
}

fn parse_rank(s: &str) -> Option<f64> {
    let v = parse_count(s)?;
    if v != libm::trunc(v) || v < 1.0 {
        return None;
    }
    log_scale_rank(v as u64).ok()
}

fn parse_percent(s: &str) -> Option<f64> {
    let v = parse_count(s.trim().trim_end_matches('%'))?;
    (v <= 100.0).then_some(v)
}

impl NodeFeatures {
    /// All metrics missing.
    pub fn empty() -> Self {
        NodeFeatures {
            values: [0.0; METRIC_COUNT],
            missing: [true; METRIC_COUNT],
            flags: [false; 4],
        }
    }

    /// Cells that fail to parse are treated as absent.
    pub fn from_raw(raw: &RawMetrics) -> Self {
        type Parser = fn(&str) -> Option<f64>;
        let cells: [(&Option<String>, Parser); METRIC_COUNT] = [
            (&raw.rank, parse_rank),
            (&raw.sites_linking_in, parse_count),
            (&raw.bounce_rate, parse_percent),
            (&raw.daily_pageviews, parse_count),
            (&raw.daily_time, |s| parse_time_on_site(s).ok()),
        ];
        let mut out = NodeFeatures::empty();
        for (m, (cell, parse)) in cells.into_iter().enumerate() {
            let Some(text) = cell.as_deref().filter(|t| !t.trim().is_empty()) else {
                continue;
            };
            match parse(text) {
                Some(v) => {
                    out.values[m] = v;
                    out.missing[m] = false;
                }
                None => log::warn!("unparsable {:?} value {text:?}", Metric::ALL[m]),
            }
        }
        for (f, m) in FLAGGED.iter().enumerate() {
            out.flags[f] = !out.missing[*m as usize];
        }
        out
    }

    pub fn get(&self, m: Metric) -> Option<f64> {
        (!self.missing[m as usize]).then_some(self.values[m as usize])
    }

    pub fn binarize(&self) -> [f64; 4] {
        self.flags.map(|f| if f { 1.0 } else { 0.0 })
    }

    /// `rank_log, sites_linking_in, bounce_rate, daily_pageviews,
    /// daily_time_s`, then the four presence flags.
    pub fn feature_vector(&self) -> [f64; FEATURE_DIM] {
        let mut v = [0.0; FEATURE_DIM];
        v[..METRIC_COUNT].copy_from_slice(&self.values);
        v[METRIC_COUNT..].copy_from_slice(&self.binarize());
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputationSummary {
    pub imputed: [usize; METRIC_COUNT],
    /// Values filled from the global mean because no node in the component
    /// had the metric.
    pub global_fallback: [usize; METRIC_COUNT],
}

/// Fills each missing metric with the mean over the `k` nearest nodes that
/// have it, nearest by hop distance. Within a hop layer, nodes with the
/// strongest edge into the previous layer come first, then lexicographic
/// domain. Only pre-imputation values are read.
pub fn impute_missing(
    graph: &IndexedGraph,
    features: &[NodeFeatures],
    k: usize,
) -> Result<(Vec<NodeFeatures>, ImputationSummary)> {
    let n = graph.node_count();
    if features.len() != n {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} feature rows for {n} graph nodes",
            features.len()
        )));
    }
    if k == 0 {
        return Err(invalid!("k must be >= 1"));
    }
    let mut global = [0.0; METRIC_COUNT];
    for (m, g) in global.iter_mut().enumerate() {
        let present: Vec<f64> = features
            .iter()
            .filter(|f| !f.missing[m])
            .map(|f| f.values[m])
            .collect();
        if present.is_empty() {
            log::warn!("no node has {:?}; imputing 0", Metric::ALL[m]);
        } else {
            *g = present.iter().sum::<f64>() / present.len() as f64;
        }
    }

    let mut out = features.to_vec();
    let mut summary = ImputationSummary::default();
    let mut dist = vec![usize::MAX; n];
    let mut touched = Vec::new();
    for v in 0..n {
        let wanted: Vec<usize> = (0..METRIC_COUNT).filter(|&m| features[v].missing[m]).collect();
        if wanted.is_empty() {
            continue;
        }
        let mut picked: Vec<Vec<f64>> = vec![Vec::new(); METRIC_COUNT];
        let mut layer = vec![v];
        dist[v] = 0;
        touched.push(v);
        let mut depth = 0;
        while !layer.is_empty() && wanted.iter().any(|&m| picked[m].len() < k) {
            depth += 1;
            let mut next = Vec::new();
            for &u in &layer {
                for &w in graph.neighbors(u) {
                    if dist[w] == usize::MAX {
                        dist[w] = depth;
                        touched.push(w);
                        next.push(w);
                    }
                }
            }
            let mut keyed: Vec<(f64, usize, usize)> = next
                .iter()
                .map(|&w| {
                    let tie = graph
                        .neighbors(w)
                        .iter()
                        .zip(graph.neighbor_weights(w))
                        .filter(|(&x, _)| dist[x] == depth - 1)
                        .map(|(_, &s)| s)
                        .fold(f64::NEG_INFINITY, f64::max);
                    (tie, graph.canonical_rank(w), w)
                })
                .collect();
            keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, _, w) in &keyed {
                for &m in &wanted {
                    if picked[m].len() < k && !features[w].missing[m] {
                        picked[m].push(features[w].values[m]);
                    }
                }
            }
            layer = next;
        }
        for &m in &wanted {
            let vals = &picked[m];
            out[v].values[m] = if vals.is_empty() {
                summary.global_fallback[m] += 1;
                global[m]
            } else {
                vals.iter().sum::<f64>() / vals.len() as f64
            };
            out[v].missing[m] = false;
            summary.imputed[m] += 1;
        }
        for &t in &touched {
            dist[t] = usize::MAX;
        }
        touched.clear();
    }
    let fallbacks: usize = summary.global_fallback.iter().sum();
    if fallbacks > 0 {
        log::info!("imputation used the global mean for {fallbacks} values");
    }
    Ok((out, summary))
}

/// Presence share per flagged metric, in flag order.
pub fn presence_rates(features: &[NodeFeatures]) -> [f64; 4] {
    let mut rates = [0.0; 4];
    if features.is_empty() {
        return rates;
    }
    for f in features {
        for (r, flag) in rates.iter_mut().zip(f.flags) {
            if flag {
                *r += 1.0;
            }
        }
    }
    rates.map(|r| r / features.len() as f64)
}

/// Table-driven helper for tests and synthetic data: builds features from
/// optional already-scaled values.
pub fn features_from_values(values: [Option<f64>; METRIC_COUNT]) -> NodeFeatures {
    let mut f = NodeFeatures::empty();
    for (m, v) in values.iter().enumerate() {
        if let Some(v) = v {
            f.values[m] = *v;
            f.missing[m] = false;
        }
    }
    for (i, m) in FLAGGED.iter().enumerate() {
        f.flags[i] = !f.missing[*m as usize];
    }
    f
}

impl core::fmt::Display for Metric {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(FEATURE_NAMES[*self as usize])
    }
}
