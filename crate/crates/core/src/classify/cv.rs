use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::folds::stratified_folds;
use super::fusion::{fit_fusion_weights, late_fuse};
use super::svm::{argmax_rows, train_svm_rbf, SvmConfig, SvmFit};
use super::{RepresentationChannel, Standardizer};
use crate::error::{invalid, Error, Result};
use crate::eval::{EvalReport, Task};
use crate::rng::{derive_seed, rng_for};

const LEAK_STREAM: u64 = 0x4c45_414b;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    #[default]
    Uniform,
    /// Simplex weights fit on each training fold's out-of-fold posteriors.
    Learned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub folds: usize,
    pub svm: SvmConfig,
    pub fusion: FusionMode,
    /// Refit fold 0 with shuffled test labels and compare fingerprints.
    pub leakage_check: bool,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 5,
            svm: SvmConfig::default(),
            fusion: FusionMode::Uniform,
            leakage_check: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResult {
    pub report: EvalReport,
    /// Model fingerprint of each fold.
    pub fingerprints: Vec<u64>,
    /// `None` when the check was not run.
    pub leakage_ok: Option<bool>,
    /// Calibrated posteriors of each fold's test rows.
    pub test_posteriors: Vec<Array2<f64>>,
    /// Out-of-fold posteriors of each fold's training rows.
    pub train_posteriors: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Fold index of each labeled sample.
    pub folds: Vec<usize>,
    pub channels: Vec<ChannelResult>,
    /// Present when more than one channel was given.
    pub fusion: Option<EvalReport>,
}

impl CvOutcome {
    pub fn leakage_ok(&self) -> bool {
        self.channels.iter().all(|c| c.leakage_ok != Some(false))
    }

    pub fn reports(&self) -> Vec<EvalReport> {
        self.channels
            .iter()
            .map(|c| c.report.clone())
            .chain(self.fusion.clone())
            .collect()
    }
}

fn split(folds: &[usize], k: usize) -> (Vec<usize>, Vec<usize>) {
    let train = (0..folds.len()).filter(|&i| folds[i] != k).collect();
    let test = (0..folds.len()).filter(|&i| folds[i] == k).collect();
    (train, test)
}

/// Standardizes on the training rows, then fits. Only `y[train]` is read.
fn fit_fold(
    x: ArrayView2<f64>,
    y: &[usize],
    train: &[usize],
    n_classes: usize,
    svm: &SvmConfig,
) -> Result<(Standardizer, SvmFit)> {
    let xt = x.select(Axis(0), train);
    let std = Standardizer::fit(xt.view())?;
    let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let fit = train_svm_rbf(std.transform(xt.view())?.view(), &yt, n_classes, svm)?;
    Ok((std, fit))
}

/// Stratified k-fold evaluation of every channel on `rows` (indices into
/// the channel matrices) with labels `y`, plus late fusion of all channels.
pub fn cross_validate(
    channels: &[RepresentationChannel],
    rows: &[usize],
    y: &[usize],
    task: Task,
    config: &CvConfig,
) -> Result<CvOutcome> {
    let (folds, results) = cross_validate_channels(channels, rows, y, task, config)?;
    let fusion = if results.len() > 1 {
        Some(fuse_results(&results, &folds, y, task, config.fusion)?)
    } else {
        None
    };
    Ok(CvOutcome {
        folds,
        channels: results,
        fusion,
    })
}

/// Per-channel half of [`cross_validate`]: the fold assignment and one
/// result per channel, without fusion.
pub fn cross_validate_channels(
    channels: &[RepresentationChannel],
    rows: &[usize],
    y: &[usize],
    task: Task,
    config: &CvConfig,
) -> Result<(Vec<usize>, Vec<ChannelResult>)> {
    let n_classes = task.classes().len();
    if channels.is_empty() {
        return Err(invalid!("no channels to evaluate"));
    }
    if rows.len() != y.len() || rows.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows against {} labels",
            rows.len(),
            y.len()
        )));
    }
    if config.folds < 2 || config.folds > rows.len() {
        return Err(invalid!("folds must be in 2..={}", rows.len()));
    }
    let domains = &channels[0].domains;
    if let Some(c) = channels.iter().find(|c| &c.domains != domains) {
        return Err(invalid!("channel {} uses a different domain order", c.name));
    }
    if let Some(&r) = rows.iter().find(|&&r| r >= domains.len()) {
        return Err(invalid!("row {r} outside the {} domains", domains.len()));
    }

    let folds = stratified_folds(y, n_classes, config.folds, config.seed);
    let mut results = Vec::with_capacity(channels.len());
    for channel in channels {
        let x = channel.rows(rows);
        let mut pairs = Vec::with_capacity(config.folds);
        let mut fingerprints = Vec::with_capacity(config.folds);
        let mut leakage_ok = None;
        let mut test_posteriors = Vec::with_capacity(config.folds);
        let mut train_posteriors = Vec::with_capacity(config.folds);
        let mut hyper = Vec::new();
        for k in 0..config.folds {
            let (train, test) = split(&folds, k);
            let svm = SvmConfig {
                seed: derive_seed(config.seed, &[k as u64]),
                ..config.svm.clone()
            };
            let (std, fit) = fit_fold(x.view(), y, &train, n_classes, &svm)?;
            let fingerprint = fit.model.fingerprint();
            if k == 0 && config.leakage_check {
                let mut shuffled = y.to_vec();
                let mut test_labels: Vec<usize> = test.iter().map(|&i| y[i]).collect();
                test_labels.shuffle(&mut rng_for(config.seed, &[LEAK_STREAM]));
                for (&i, l) in test.iter().zip(test_labels) {
                    shuffled[i] = l;
                }
                let (_, probe) = fit_fold(x.view(), &shuffled, &train, n_classes, &svm)?;
                let ok = probe.model.fingerprint() == fingerprint;
                if !ok {
                    log::error!("channel {}: test labels changed the fold-0 model", channel.name);
                }
                leakage_ok = Some(ok);
            }
            let xs = std.transform(x.select(Axis(0), &test).view())?;
            let post = fit.model.predict_proba(xs.view())?;
            let truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
            pairs.push((truth, argmax_rows(&post)));
            hyper.push(BTreeMap::from([
                (String::from("C"), fit.c),
                (String::from("gamma"), fit.gamma),
            ]));
            fingerprints.push(fingerprint);
            test_posteriors.push(post);
            train_posteriors.push(fit.oof_posteriors);
        }
        let mut report = EvalReport::from_folds(task, channel.name.clone(), &pairs, n_classes)?;
        report.hyperparameters = hyper;
        log::info!(
            "{} / {}: macro-F1 {:.4}, accuracy {:.4}",
            task.name(),
            channel.name,
            report.mean_macro_f1,
            report.mean_accuracy
        );
        results.push(ChannelResult {
            report,
            fingerprints,
            leakage_ok,
            test_posteriors,
            train_posteriors,
        });
    }

    Ok((folds, results))
}

/// Late fusion of per-channel CV results that share the fold assignment
/// `folds`. Learned weights are fit on each fold's training OOF posteriors.
pub fn fuse_results(
    results: &[ChannelResult],
    folds: &[usize],
    y: &[usize],
    task: Task,
    mode: FusionMode,
) -> Result<EvalReport> {
    let n_classes = task.classes().len();
    let m = results.len();
    if m == 0 {
        return Err(invalid!("no channels to fuse"));
    }
    if folds.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fold tags against {} labels",
            folds.len(),
            y.len()
        )));
    }
    let k_folds = folds.iter().max().map_or(0, |&k| k + 1);
    if let Some(r) = results
        .iter()
        .find(|r| r.test_posteriors.len() != k_folds || r.train_posteriors.len() != k_folds)
    {
        return Err(invalid!("channel {} does not cover {k_folds} folds", r.report.system));
    }
    let mut pairs = Vec::with_capacity(k_folds);
    let mut hyper = Vec::new();
    for k in 0..k_folds {
        let (train, test) = split(folds, k);
        let weights = match mode {
            FusionMode::Uniform => alloc::vec![1.0 / m as f64; m],
            FusionMode::Learned => {
                let views: Vec<_> = results.iter().map(|r| r.train_posteriors[k].view()).collect();
                let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
                fit_fusion_weights(&views, &yt)?
            }
        };
        let views: Vec<_> = results.iter().map(|r| r.test_posteriors[k].view()).collect();
        let fused = late_fuse(&views, &weights)?;
        pairs.push((test.iter().map(|&i| y[i]).collect(), argmax_rows(&fused)));
        hyper.push(
            results
                .iter()
                .zip(&weights)
                .map(|(r, &w)| (format!("w_{}", r.report.system), w))
                .collect(),
        );
    }
    let name = results
        .iter()
        .map(|r| r.report.system.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let mut report = EvalReport::from_folds(task, name, &pairs, n_classes)?;
    report.hyperparameters = hyper;
    Ok(report)
}
