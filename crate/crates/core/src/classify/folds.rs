use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng::rng_for;

const FOLD_STREAM: u64 = 0x464f_4c44;

/// Fold index per sample. Each class is shuffled and dealt round-robin,
/// continuing from where the previous class stopped, so fold sizes differ
/// by at most one and per-class counts by at most one.
pub fn stratified_folds(y: &[usize], n_classes: usize, folds: usize, seed: u64) -> Vec<usize> {
    assert!(folds >= 1, "at least one fold");
    let mut out = vec![0; y.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            log::warn!(
                "class {class} has {} members for {folds} folds; some folds will lack it",
                members.len()
            );
        }
        members.shuffle(&mut rng_for(seed, &[FOLD_STREAM, class as u64]));
        for i in members {
            out[i] = next;
            next = (next + 1) % folds;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_and_deterministic() {
        let y: Vec<usize> = (0..103).map(|i| i % 3).collect();
        let f = stratified_folds(&y, 3, 5, 9);
        assert_eq!(f, stratified_folds(&y, 3, 5, 9));
        let sizes: Vec<usize> = (0..5).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..3 {
            let per: Vec<usize> = (0..5)
                .map(|k| (0..103).filter(|&i| y[i] == c && f[i] == k).count())
                .collect();
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn tiny_class_is_best_effort() {
        let y = [0, 0, 0, 0, 0, 1, 1];
        let f = stratified_folds(&y, 2, 5, 0);
        assert!(f.iter().all(|&k| k < 5));
    }
}
