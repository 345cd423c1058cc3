use alloc::vec;
use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2};

use super::svm::argmax_rows;
use crate::error::{invalid, Error, Result};
use crate::eval::macro_f1;

/// Step of the simplex grid searched by `fit_fusion_weights`.
pub const SIMPLEX_STEPS: usize = 20;

fn check_inputs(posteriors: &[ArrayView2<f64>]) -> Result<()> {
    let Some(first) = posteriors.first() else {
        return Err(invalid!("fusion needs at least one channel"));
    };
    if let Some(bad) = posteriors.iter().find(|p| p.shape() != first.shape()) {
        return Err(Error::ShapeMismatch(alloc::format!(
            "posterior shapes {:?} and {:?}",
            first.shape(),
            bad.shape()
        )));
    }
    Ok(())
}

/// `sum_i w_i P_i`, evaluated as `P_r + sum_{i != r} w_i (P_i - P_r)` with
/// `r` the heaviest channel, so one-hot weights and identical inputs are
/// reproduced exactly.
pub fn late_fuse(posteriors: &[ArrayView2<f64>], weights: &[f64]) -> Result<Array2<f64>> {
    check_inputs(posteriors)?;
    if weights.len() != posteriors.len() {
        return Err(invalid!(
            "{} weights for {} channels",
            weights.len(),
            posteriors.len()
        ));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid!("weights must be nonnegative and sum to 1: {weights:?}"));
    }
    let r = (0..weights.len())
        .reduce(|a, b| if weights[b] > weights[a] { b } else { a })
        .expect("nonempty");
    let anchor = posteriors[r];
    let mut out = anchor.to_owned();
    for (i, (p, &w)) in posteriors.iter().zip(weights).enumerate() {
        if i == r || w == 0.0 {
            continue;
        }
        ndarray::Zip::from(&mut out)
            .and(p)
            .and(&anchor)
            .for_each(|o, &pi, &pr| *o += w * (pi - pr));
    }
    Ok(out)
}

/// Mean negative log-likelihood of the true class, probabilities floored
/// at 1e-15.
pub fn log_loss(p: ArrayView2<f64>, labels: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -libm::log(p[[i, y]].max(1e-15)))
        .sum::<f64>()
        / labels.len().max(1) as f64
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=total).rev() {
        prefix.push(k);
        compositions(parts - 1, total - k, prefix, out);
        prefix.pop();
    }
}

/// Simplex weights (grid step 1/20, plus the exact uniform point)
/// maximizing macro-F1 of the fused argmax. Ties go to lower log-loss,
/// then to uniform, then to the first grid point.
pub fn fit_fusion_weights(posteriors: &[ArrayView2<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    check_inputs(posteriors)?;
    let m = posteriors.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    let (n, c) = posteriors[0].dim();
    if labels.len() != n {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{n} posterior rows against {} labels",
            labels.len()
        )));
    }
    let score = |w: &[f64]| -> Result<(f64, f64)> {
        let fused = late_fuse(posteriors, w)?;
        Ok((
            macro_f1(labels, &argmax_rows(&fused), c)?,
            log_loss(fused.view(), labels),
        ))
    };
    let uniform = vec![1.0 / m as f64; m];
    let mut best_w = uniform.clone();
    let mut best = score(&uniform)?;
    let mut grid = Vec::new();
    compositions(m, SIMPLEX_STEPS, &mut Vec::with_capacity(m), &mut grid);
    for point in grid {
        let w: Vec<f64> = point
            .iter()
            .map(|&k| k as f64 / SIMPLEX_STEPS as f64)
            .collect();
        let s = score(&w)?;
        if s.0 > best.0 || (s.0 == best.0 && s.1 < best.1) {
            best = s;
            best_w = w;
        }
    }
    Ok(best_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn fuse_arithmetic() {
        let a = array![[1.0, 0.0, 0.0]];
        let b = array![[0.0, 1.0, 0.0]];
        let f = late_fuse(&[a.view(), b.view()], &[0.5, 0.5]).unwrap();
        assert_eq!(f, array![[0.5, 0.5, 0.0]]);
        let p = array![[0.2, 0.3, 0.5], [0.7, 0.2, 0.1]];
        let q = array![[0.1, 0.1, 0.8], [0.3, 0.3, 0.4]];
        assert_eq!(late_fuse(&[p.view(), q.view()], &[1.0, 0.0]).unwrap(), p);
        assert_eq!(late_fuse(&[p.view(), q.view()], &[0.0, 1.0]).unwrap(), q);
        let same = late_fuse(&[p.view(), p.view(), p.view()], &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(same, p);
    }

    #[test]
    fn fuse_rejects_bad_input() {
        let p = array![[0.5, 0.5]];
        let q = array![[1.0, 0.0, 0.0]];
        assert!(late_fuse(&[p.view(), q.view()], &[0.5, 0.5]).is_err());
        assert!(late_fuse(&[p.view(), p.view()], &[0.7, 0.7]).is_err());
        assert!(late_fuse(&[p.view(), p.view()], &[1.5, -0.5]).is_err());
        assert!(late_fuse(&[], &[]).is_err());
    }

    #[test]
    fn grid_covers_simplex() {
        let mut out = Vec::new();
        compositions(3, SIMPLEX_STEPS, &mut Vec::new(), &mut out);
        assert_eq!(out.len(), 231);
        assert!(out.iter().all(|w| w.iter().sum::<usize>() == SIMPLEX_STEPS));
        assert_eq!(out[0], vec![20, 0, 0]);
    }

    #[test]
    fn identical_channels_get_uniform_weights() {
        let p = array![[0.6, 0.4], [0.3, 0.7], [0.55, 0.45]];
        let w = fit_fusion_weights(&[p.view(), p.view(), p.view()], &[0, 1, 1]).unwrap();
        assert_eq!(w, vec![1.0 / 3.0; 3]);
        assert_eq!(fit_fusion_weights(&[p.view()], &[0, 1, 1]).unwrap(), vec![1.0]);
    }
}
