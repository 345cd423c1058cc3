//! Planted-partition media graphs with overlap records, class-shifted
//! engagement metrics, and labels, reproducible from a seed.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::eval::Task;
use crate::features::{RawMetrics, METRIC_COUNT};
use crate::graph::{OverlapRecord, OverlapTarget};
use crate::rng::{rng_for, Rng};

const BLOCK_STREAM: u64 = 0x424c_4f43;
const EDGE_STREAM: u64 = 0x4544_4745;
const METRIC_STREAM: u64 = 0x4d45_5452;
const LABEL_STREAM: u64 = 0x4c41_424c;
const HALO_STREAM: u64 = 0x4841_4c4f;

/// Share of nodes missing each metric, in `Metric` order.
pub const DEFAULT_MISSING_RATES: [f64; METRIC_COUNT] = [0.0008, 0.0502, 0.6891, 0.3892, 0.6373];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Require `p_in > p_out`.
    pub homophilous: bool,
    /// Per-class offset of every metric distribution; empty means evenly
    /// spaced in [-1, 1].
    pub class_shift: Vec<f64>,
    pub missing_rates: [f64; METRIC_COUNT],
    pub label_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_nodes: 1000,
            classes: 3,
            p_in: 0.05,
            p_out: 0.002,
            homophilous: true,
            class_shift: Vec::new(),
            missing_rates: DEFAULT_MISSING_RATES,
            label_fraction: 0.6,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes == 0 {
            return Err(invalid!("n_nodes must be >= 1"));
        }
        if !(1..=3).contains(&self.classes) {
            return Err(invalid!("classes must be 1, 2 or 3"));
        }
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !prob(self.p_in) || !prob(self.p_out) {
            return Err(invalid!("edge probabilities must lie in [0, 1]"));
        }
        if self.homophilous && self.p_in <= self.p_out {
            return Err(invalid!(
                "homophilous graph needs p_in > p_out, got {} <= {}",
                self.p_in,
                self.p_out
            ));
        }
        if !self.missing_rates.iter().all(|&r| prob(r)) || !prob(self.label_fraction) {
            return Err(invalid!("missing rates and label_fraction must lie in [0, 1]"));
        }
        if !self.class_shift.is_empty() && self.class_shift.len() != self.classes {
            return Err(invalid!(
                "class_shift has {} entries for {} classes",
                self.class_shift.len(),
                self.classes
            ));
        }
        Ok(())
    }

    pub fn shifts(&self) -> Vec<f64> {
        if !self.class_shift.is_empty() {
            return self.class_shift.clone();
        }
        if self.classes == 1 {
            return vec![0.0];
        }
        (0..self.classes)
            .map(|c| -1.0 + 2.0 * c as f64 / (self.classes - 1) as f64)
            .collect()
    }
}

/// One generated node's labels; `None` when unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthLabel {
    pub factuality: Option<String>,
    pub bias: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub config: SynthConfig,
    pub domains: Vec<String>,
    /// Planted class of every node.
    pub blocks: Vec<usize>,
    /// Every sampled edge `(u, v, score)` with `u < v`, before truncation.
    pub edges: Vec<(usize, usize, f64)>,
    /// Top-`OverlapRecord::MAX_TARGETS` neighbors per node by score, then domain.
    pub records: Vec<OverlapRecord>,
    pub metrics: Vec<RawMetrics>,
    pub labels: Vec<SynthLabel>,
}

pub fn synth_domain(i: usize) -> String {
    format!("site{:05}.com", i + 1)
}

fn sample_edges(
    blocks: &[usize],
    from: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut Rng,
) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    for v in from..blocks.len() {
        for u in 0..v {
            let p = if blocks[u] == blocks[v] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((u, v, rng.random_range(10.0..60.0)));
            }
        }
    }
    edges
}

fn format_time(seconds: u64) -> String {
    let (h, m, s) = (seconds / 3600, (seconds / 60) % 60, seconds % 60);
    if h > 0 {
        format!("{h}:{m:02}:{s:02}")
    } else {
        format!("{m}:{s:02}")
    }
}

fn sample_metrics(shift: f64, rates: &[f64; METRIC_COUNT], rng: &mut Rng) -> RawMetrics {
    let log_rank = Normal::new(5.0 - 0.8 * shift, 0.7).expect("valid normal");
    let links = LogNormal::new(5.0 + 0.8 * shift, 1.0).expect("valid lognormal");
    let bounce = Beta::new(4.0 - 1.5 * shift, 4.0 + 1.5 * shift).expect("positive shape");
    let pageviews = LogNormal::new(0.9 + 0.3 * shift, 0.4).expect("valid lognormal");
    let time = LogNormal::new(libm::log(180.0) + 0.4 * shift, 0.5).expect("valid lognormal");
    let cells = [
        format!("{}", (libm::round(libm::pow(10.0, log_rank.sample(rng))) as u64).max(1)),
        format!("{}", libm::round(links.sample(rng)) as u64),
        format!("{:.1}%", 100.0 * bounce.sample(rng)),
        format!("{:.2}", pageviews.sample(rng)),
        format_time(libm::round(time.sample(rng)) as u64),
    ];
    let mut out: [Option<String>; METRIC_COUNT] = Default::default();
    for ((slot, cell), &rate) in out.iter_mut().zip(cells).zip(rates) {
        if rng.random::<f64>() >= rate {
            *slot = Some(cell);
        }
    }
    let [rank, sites_linking_in, bounce_rate, daily_pageviews, daily_time] = out;
    RawMetrics {
        rank,
        sites_linking_in,
        bounce_rate,
        daily_pageviews,
        daily_time,
    }
}

fn top_records(domains: &[String], edges: &[(usize, usize, f64)]) -> Vec<OverlapRecord> {
    let mut nbrs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); domains.len()];
    for &(u, v, s) in edges {
        nbrs[u].push((v, s));
        nbrs[v].push((u, s));
    }
    nbrs.into_iter()
        .enumerate()
        .map(|(v, mut list)| {
            list.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| domains[a.0].cmp(&domains[b.0])));
            list.truncate(OverlapRecord::MAX_TARGETS);
            OverlapRecord {
                source: domains[v].clone(),
                targets: list
                    .into_iter()
                    .map(|(u, score)| OverlapTarget {
                        domain: domains[u].clone(),
                        score,
                    })
                    .collect(),
            }
        })
        .collect()
}

fn label_for(block: usize) -> SynthLabel {
    SynthLabel {
        factuality: Some(Task::Factuality.classes()[block].into()),
        bias: Some(Task::Bias.classes()[block].into()),
    }
}

const UNLABELED: SynthLabel = SynthLabel {
    factuality: None,
    bias: None,
};

/// Balanced blocks in shuffled order, edges by block membership, metrics
/// shifted by class and masked at the configured rates, and
/// `round(label_fraction * n)` labeled nodes chosen at random.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let n = config.n_nodes;
    let mut blocks: Vec<usize> = (0..n).map(|i| i % config.classes).collect();
    blocks.shuffle(&mut rng_for(config.seed, &[BLOCK_STREAM]));
    let domains: Vec<String> = (0..n).map(synth_domain).collect();
    let edges = sample_edges(
        &blocks,
        0,
        config.p_in,
        config.p_out,
        &mut rng_for(config.seed, &[EDGE_STREAM]),
    );
    let shifts = config.shifts();
    let mut mrng = rng_for(config.seed, &[METRIC_STREAM]);
    let metrics = blocks
        .iter()
        .map(|&b| sample_metrics(shifts[b], &config.missing_rates, &mut mrng))
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(config.seed, &[LABEL_STREAM]));
    let n_labeled = libm::round(config.label_fraction * n as f64) as usize;
    let mut labels = vec![UNLABELED; n];
    for &i in &order[..n_labeled] {
        labels[i] = label_for(blocks[i]);
    }
    let records = top_records(&domains, &edges);
    Ok(SynthDataset {
        config: config.clone(),
        domains,
        blocks,
        edges,
        records,
        metrics,
        labels,
    })
}

/// Appends `round(halo_factor * n)` unlabeled nodes with random blocks,
/// wired to every node by the same block probabilities, and recomputes the
/// records. Existing nodes, edges, metrics and labels are kept.
pub fn plant_unlabeled_halo(base: &SynthDataset, halo_factor: f64) -> Result<SynthDataset> {
    if !(halo_factor >= 0.0) {
        return Err(invalid!("halo_factor must be >= 0"));
    }
    let config = &base.config;
    let n = base.domains.len();
    let extra = libm::round(halo_factor * n as f64) as usize;
    if extra == 0 {
        return Ok(base.clone());
    }
    let mut rng = rng_for(config.seed, &[HALO_STREAM]);
    let mut out = base.clone();
    let shifts = config.shifts();
    for i in n..n + extra {
        let b = rng.random_range(0..config.classes);
        out.blocks.push(b);
        out.domains.push(synth_domain(i));
        out.metrics
            .push(sample_metrics(shifts[b], &config.missing_rates, &mut rng));
        out.labels.push(UNLABELED);
    }
    let new_edges = sample_edges(&out.blocks, n, config.p_in, config.p_out, &mut rng);
    out.edges.extend(new_edges);
    out.edges.sort_by_key(|e| (e.0, e.1));
    out.records = top_records(&out.domains, &out.edges);
    Ok(out)
}

impl SynthDataset {
    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|l| l.factuality.is_some()).count()
    }

    /// Domains that carry a label, in node order.
    pub fn labeled_domains(&self) -> Vec<String> {
        self.domains
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.factuality.is_some())
            .map(|(d, _)| d.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::NodeFeatures;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_nodes: 120,
            p_in: 0.1,
            p_out: 0.01,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn reproducible_from_seed() {
        assert_eq!(generate(&small(3)).unwrap(), generate(&small(3)).unwrap());
        assert_ne!(generate(&small(3)).unwrap().edges, generate(&small(4)).unwrap().edges);
    }

    #[test]
    fn no_cross_edges_without_p_out() {
        let d = generate(&SynthConfig {
            p_out: 0.0,
            ..small(1)
        })
        .unwrap();
        assert!(!d.edges.is_empty());
        assert!(d.edges.iter().all(|&(u, v, _)| d.blocks[u] == d.blocks[v]));
    }

    #[test]
    fn zero_missing_rate_means_present() {
        let mut cfg = small(2);
        cfg.missing_rates = [0.0, 1.0, 0.0, 0.5, 0.0];
        let d = generate(&cfg).unwrap();
        for raw in &d.metrics {
            let f = NodeFeatures::from_raw(raw);
            assert!(!f.missing[0] && !f.missing[2] && !f.missing[4]);
            assert!(f.missing[1]);
        }
    }

    #[test]
    fn infeasible_homophily_rejected() {
        let cfg = SynthConfig {
            p_in: 0.01,
            p_out: 0.01,
            ..small(0)
        };
        assert!(generate(&cfg).is_err());
        let ok = SynthConfig {
            homophilous: false,
            ..cfg
        };
        assert!(generate(&ok).is_ok());
    }

    #[test]
    fn records_hold_top_scores() {
        let d = generate(&small(5)).unwrap();
        for r in &d.records {
            r.validate().unwrap();
            assert!(r.targets.windows(2).all(|w| w[0].score >= w[1].score));
        }
        assert_eq!(d.labeled_count(), 72);
    }

    #[test]
    fn halo_counts() {
        let mut cfg = small(6);
        cfg.label_fraction = 1.0;
        let d = generate(&cfg).unwrap();
        assert_eq!(plant_unlabeled_halo(&d, 0.0).unwrap(), d);
        let h = plant_unlabeled_halo(&d, 2.5).unwrap();
        assert_eq!(h.domains.len(), 420);
        assert_eq!(h.labeled_count(), 120);
        assert_eq!(&h.edges.iter().filter(|e| e.1 < 120).count(), &d.edges.len());
    }

    #[test]
    fn time_format() {
        assert_eq!(format_time(65), "1:05");
        assert_eq!(format_time(3725), "1:02:05");
    }
}
