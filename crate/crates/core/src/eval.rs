//! Classification metrics, the majority baseline, and result tables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Factuality,
    Bias,
}

impl Task {
    pub const ALL: [Task; 2] = [Task::Factuality, Task::Bias];

    /// Class names in index order.
    pub fn classes(self) -> &'static [&'static str] {
        match self {
            Task::Factuality => &["low", "mixed", "high"],
            Task::Bias => &["left", "centre", "right"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Factuality => "factuality",
            Task::Bias => "bias",
        }
    }

    pub fn class_index(self, label: &str) -> Option<usize> {
        self.classes().iter().position(|c| *c == label)
    }
}

fn check_pair(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<()> {
    if y_true.is_empty() {
        return Err(invalid!("metrics need at least one sample"));
    }
    if y_true.len() != y_pred.len() {
        return Err(invalid!(
            "{} true labels against {} predictions",
            y_true.len(),
            y_pred.len()
        ));
    }
    if let Some(bad) = y_true.iter().chain(y_pred).find(|&&c| c >= n_classes) {
        return Err(invalid!("class {bad} outside 0..{n_classes}"));
    }
    Ok(())
}

/// `m[t][p]` counts samples of true class `t` predicted as `p`.
pub fn confusion(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    check_pair(y_true, y_pred, n_classes)?;
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

/// Per-class F1 from a confusion matrix; 0 when precision + recall = 0.
pub fn per_class_f1(m: &[Vec<u64>]) -> Vec<f64> {
    let n = m.len();
    (0..n)
        .map(|c| {
            let tp = m[c][c] as f64;
            let predicted: u64 = (0..n).map(|t| m[t][c]).sum();
            let actual: u64 = m[c].iter().sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        })
        .collect()
}

pub fn macro_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    let m = confusion(y_true, y_pred, n_classes)?;
    Ok(per_class_f1(&m).iter().sum::<f64>() / n_classes as f64)
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let n_classes = y_true.iter().chain(y_pred).max().map_or(0, |&c| c + 1);
    check_pair(y_true, y_pred, n_classes)?;
    let hits = y_true.iter().zip(y_pred).filter(|(t, p)| t == p).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Most frequent training class; ties go to the lexicographically smallest
/// class name.
pub fn majority_baseline(train: &[usize], class_names: &[&str]) -> Result<usize> {
    if train.is_empty() {
        return Err(invalid!("majority baseline needs training labels"));
    }
    let mut counts = vec![0usize; class_names.len()];
    for &c in train {
        *counts
            .get_mut(c)
            .ok_or_else(|| invalid!("class {c} has no name"))? += 1;
    }
    let best = *counts.iter().max().expect("nonempty");
    Ok((0..class_names.len())
        .filter(|&c| counts[c] == best)
        .min_by_key(|&c| class_names[c])
        .expect("some class reaches the maximum"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub macro_f1: f64,
    pub accuracy: f64,
}

/// Cross-validated results of one channel or ensemble on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub system: String,
    pub folds: Vec<FoldMetrics>,
    pub mean_macro_f1: f64,
    pub mean_accuracy: f64,
    /// Summed over folds; row sums are the per-class supports.
    pub confusion: Vec<Vec<u64>>,
    /// Chosen hyperparameters of each fold, by name.
    #[serde(default)]
    pub hyperparameters: Vec<BTreeMap<String, f64>>,
}

impl EvalReport {
    /// Builds a report from per-fold `(y_true, y_pred)` pairs.
    pub fn from_folds(
        task: Task,
        system: impl Into<String>,
        folds: &[(Vec<usize>, Vec<usize>)],
        n_classes: usize,
    ) -> Result<Self> {
        if folds.is_empty() {
            return Err(invalid!("report needs at least one fold"));
        }
        let mut total = vec![vec![0u64; n_classes]; n_classes];
        let mut metrics = Vec::with_capacity(folds.len());
        for (t, p) in folds {
            let m = confusion(t, p, n_classes)?;
            for (row, add) in total.iter_mut().zip(&m) {
                for (a, b) in row.iter_mut().zip(add) {
                    *a += b;
                }
            }
            metrics.push(FoldMetrics {
                macro_f1: per_class_f1(&m).iter().sum::<f64>() / n_classes as f64,
                accuracy: accuracy(t, p)?,
            });
        }
        let k = metrics.len() as f64;
        Ok(EvalReport {
            task,
            system: system.into(),
            mean_macro_f1: metrics.iter().map(|m| m.macro_f1).sum::<f64>() / k,
            mean_accuracy: metrics.iter().map(|m| m.accuracy).sum::<f64>() / k,
            folds: metrics,
            confusion: total,
            hyperparameters: Vec::new(),
        })
    }
}

/// Majority baseline under the fold assignment `folds`: each fold predicts
/// the majority class of its training labels.
pub fn majority_cv_report(task: Task, folds: &[usize], y: &[usize]) -> Result<EvalReport> {
    if folds.len() != y.len() {
        return Err(invalid!("{} fold tags against {} labels", folds.len(), y.len()));
    }
    let names = task.classes();
    let k_folds = folds.iter().max().map_or(0, |&k| k + 1);
    let mut pairs = Vec::with_capacity(k_folds);
    for k in 0..k_folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != k).map(|i| y[i]).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == k).map(|i| y[i]).collect();
        let c = majority_baseline(&train, names)?;
        let len = test.len();
        pairs.push((test, vec![c; len]));
    }
    EvalReport::from_folds(task, "majority", &pairs, names.len())
}

/// Fixed-width table, one block per task, rows by mean macro-F1
/// descending (ties by system name).
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let width = reports
        .iter()
        .map(|r| r.system.len())
        .max()
        .unwrap_or(0)
        .max("System".len());
    for task in Task::ALL {
        let mut rows: Vec<&EvalReport> = reports.iter().filter(|r| r.task == task).collect();
        if rows.is_empty() {
            continue;
        }
        rows.sort_by(|a, b| {
            b.mean_macro_f1
                .total_cmp(&a.mean_macro_f1)
                .then_with(|| a.system.cmp(&b.system))
        });
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "Task: {}", task.name());
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}", "System", "Macro-F1", "Acc");
        let _ = writeln!(out, "{}", "-".repeat(width + 20));
        for r in rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>8}",
                r.system,
                format!("{:.2}", 100.0 * r.mean_macro_f1),
                format!("{:.2}", 100.0 * r.mean_accuracy)
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        assert_eq!(macro_f1(&y, &y, 3).unwrap(), 1.0);
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn zero_support_class_scores_zero() {
        // class 2 never occurs and is never predicted
        let f1 = macro_f1(&[0, 1], &[0, 1], 3).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_and_mismatched_inputs_rejected() {
        assert!(macro_f1(&[], &[], 3).is_err());
        assert!(macro_f1(&[0], &[0, 1], 3).is_err());
        assert!(macro_f1(&[3], &[0], 3).is_err());
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn majority_ties_are_lexicographic() {
        let names = ["low", "mixed", "high"];
        assert_eq!(majority_baseline(&[0, 2, 0, 2], &names).unwrap(), 2);
        assert_eq!(majority_baseline(&[1], &names).unwrap(), 1);
        assert!(majority_baseline(&[], &names).is_err());
    }

    #[test]
    fn report_aggregates_folds() {
        let folds = [
            (vec![0, 1, 2], vec![0, 1, 1]),
            (vec![2, 2, 0], vec![2, 2, 0]),
        ];
        let r = EvalReport::from_folds(Task::Bias, "x", &folds, 3).unwrap();
        assert_eq!(r.folds.len(), 2);
        assert!((r.folds[1].macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.folds[1].accuracy, 1.0);
        let supports: Vec<u64> = r.confusion.iter().map(|row| row.iter().sum()).collect();
        assert_eq!(supports, vec![2, 1, 3]);
        assert!((r.mean_accuracy - (2.0 / 3.0 + 1.0) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn task_classes_round_trip() {
        assert_eq!(Task::Bias.class_index("centre"), Some(1));
        assert_eq!(Task::Factuality.class_index("center"), None);
    }

    #[test]
    fn majority_report_uses_training_folds() {
        // Fold 0 trains on {2, 2, 1} and predicts right; fold 1 trains on {0, 0, 2}.
        let y = [0, 0, 2, 2, 1, 2];
        let folds = [0, 0, 1, 1, 1, 0];
        let r = majority_cv_report(Task::Bias, &folds, &y).unwrap();
        assert_eq!(r.system, "majority");
        assert_eq!(r.folds[0].accuracy, 1.0 / 3.0);
        assert_eq!(r.folds[1].accuracy, 0.0);
        assert_eq!(r.confusion[0], vec![0, 0, 2]);
    }
}
