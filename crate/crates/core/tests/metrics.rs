mod common;

use mediaprof_core::eval::{accuracy, confusion, macro_f1, majority_baseline, Task};
use rand::seq::SliceRandom;
use rand::Rng as _;

/// Per-class F1 straight from counting, no confusion matrix.
fn oracle_macro_f1(t: &[usize], p: &[usize], k: usize) -> f64 {
    let mut total = 0.0;
    for c in 0..k {
        let tp = t.iter().zip(p).filter(|&(&a, &b)| a == c && b == c).count() as f64;
        let fp = t.iter().zip(p).filter(|&(&a, &b)| a != c && b == c).count() as f64;
        let fneg = t.iter().zip(p).filter(|&(&a, &b)| a == c && b != c).count() as f64;
        // 2PR/(P+R) = 2tp/(2tp+fp+fn) whenever P+R > 0.
        if tp > 0.0 {
            total += 2.0 * tp / (2.0 * tp + fp + fneg);
        }
    }
    total / k as f64
}

fn decode(mut code: usize, len: usize) -> Vec<usize> {
    (0..len)
        .map(|_| {
            let d = code % 3;
            code /= 3;
            d
        })
        .collect()
}

#[test]
fn exhaustive_agreement_up_to_length_six() {
    let mut checked = 0u64;
    for len in 1..=6u32 {
        let count = 3usize.pow(len);
        let vectors: Vec<Vec<usize>> = (0..count).map(|c| decode(c, len as usize)).collect();
        for t in &vectors {
            for p in &vectors {
                let got = macro_f1(t, p, 3).unwrap();
                let want = oracle_macro_f1(t, p, 3);
                assert!(
                    (got - want).abs() <= 4.0 * f64::EPSILON,
                    "{t:?} {p:?}: {got} vs {want}"
                );
                let m = confusion(t, p, 3).unwrap();
                let trace: u64 = (0..3).map(|c| m[c][c]).sum();
                assert_eq!(accuracy(t, p).unwrap(), trace as f64 / t.len() as f64);
                checked += 1;
            }
        }
    }
    assert_eq!(checked, (1..=6).map(|l| 9u64.pow(l)).sum::<u64>());
}

#[test]
fn random_instances_up_to_length_eight() {
    let mut r = common::rng(11);
    for _ in 0..5000 {
        let len = r.random_range(1..=8);
        let t: Vec<usize> = (0..len).map(|_| r.random_range(0..3)).collect();
        let p: Vec<usize> = (0..len).map(|_| r.random_range(0..3)).collect();
        let got = macro_f1(&t, &p, 3).unwrap();
        assert!((got - oracle_macro_f1(&t, &p, 3)).abs() <= 4.0 * f64::EPSILON);
        assert!((0.0..=1.0).contains(&got));
    }
}

#[test]
fn invariant_under_consistent_relabeling() {
    let mut r = common::rng(12);
    for _ in 0..500 {
        let len = r.random_range(1..=30);
        let t: Vec<usize> = (0..len).map(|_| r.random_range(0..3)).collect();
        let p: Vec<usize> = (0..len).map(|_| r.random_range(0..3)).collect();
        let mut perm = [0, 1, 2];
        perm.shuffle(&mut r);
        let tp: Vec<usize> = t.iter().map(|&c| perm[c]).collect();
        let pp: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
        let a = macro_f1(&t, &p, 3).unwrap();
        let b = macro_f1(&tp, &pp, 3).unwrap();
        assert!((a - b).abs() <= 4.0 * f64::EPSILON);
    }
}

#[test]
fn perfect_and_empty() {
    let y = [0, 1, 2, 2, 1];
    assert_eq!(macro_f1(&y, &y, 3).unwrap(), 1.0);
    assert!(macro_f1(&[], &[], 3).is_err());
    assert!(accuracy(&[], &[]).is_err());
    assert!(macro_f1(&[0, 1], &[0], 3).is_err());
    assert!(macro_f1(&[0, 3], &[0, 1], 3).is_err());
}

fn expand(counts: &[(usize, usize)]) -> Vec<usize> {
    counts.iter().flat_map(|&(c, k)| std::iter::repeat_n(c, k)).collect()
}

#[test]
fn majority_baseline_share() {
    let mut r = common::rng(13);
    for _ in 0..200 {
        let counts: Vec<(usize, usize)> = (0..3).map(|c| (c, r.random_range(1..50))).collect();
        let y = expand(&counts);
        let names = Task::Bias.classes();
        let c = majority_baseline(&y, names).unwrap();
        let best = counts.iter().map(|&(_, k)| k).max().unwrap();
        assert_eq!(counts[c].1, best);
        let pred = vec![c; y.len()];
        assert_eq!(accuracy(&y, &pred).unwrap(), best as f64 / y.len() as f64);
    }
}

#[test]
fn majority_ties_and_degenerate_input() {
    // "centre" < "left" < "right"
    let names = Task::Bias.classes();
    assert_eq!(majority_baseline(&[0, 0, 1, 1], names).unwrap(), 1);
    assert_eq!(majority_baseline(&[0, 2, 0, 2], names).unwrap(), 0);
    assert_eq!(majority_baseline(&[2, 2], names).unwrap(), 2);
    assert!(majority_baseline(&[], names).is_err());
}

#[test]
fn emnlp_factuality_counts() {
    // high 256, mixed 268, low 542; classes are [low, mixed, high].
    let y = expand(&[(2, 256), (1, 268), (0, 542)]);
    let names = Task::Factuality.classes();
    let c = majority_baseline(&y, names).unwrap();
    assert_eq!(names[c], "low");
    let pred = vec![c; y.len()];
    let f1 = macro_f1(&y, &pred, 3).unwrap();
    let acc = accuracy(&y, &pred).unwrap();
    assert!((100.0 * f1 - 22.47).abs() <= 0.01, "{f1}");
    assert!((100.0 * acc - 50.84).abs() <= 0.01, "{acc}");
}

#[test]
fn acl_bias_counts() {
    let y = expand(&[(0, 243), (1, 272), (2, 349)]);
    let names = Task::Bias.classes();
    let c = majority_baseline(&y, names).unwrap();
    assert_eq!(names[c], "right");
    let pred = vec![c; y.len()];
    assert!((100.0 * macro_f1(&y, &pred, 3).unwrap() - 19.18).abs() <= 0.01);
    assert!((100.0 * accuracy(&y, &pred).unwrap() - 40.39).abs() <= 0.01);
}
