use alloc::vec;
use alloc::vec::Vec;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::folds::stratified_folds;
use crate::error::{invalid, Error, Result};
use crate::eval::macro_f1;
use crate::rng::Fingerprint;

const TAU: f64 = 1e-12;
/// Floor and ceiling applied to each one-vs-rest sigmoid before the rows
/// are normalized.
const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub inner_folds: usize,
    /// KKT violation tolerance of the SMO solver.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c_grid: vec![0.1, 1.0, 10.0, 100.0],
            gamma_grid: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0],
            inner_folds: 5,
            tolerance: 1e-3,
            max_iterations: 10_000_000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |g: &[f64]| !g.is_empty() && g.iter().all(|&v| v > 0.0 && v.is_finite());
        if !positive(&self.c_grid) || !positive(&self.gamma_grid) {
            return Err(invalid!("C and gamma grids must be nonempty and positive"));
        }
        if self.inner_folds < 2 {
            return Err(invalid!("inner_folds must be >= 2"));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid!("tolerance must be positive"));
        }
        Ok(())
    }
}

/// Pairwise squared Euclidean distances between the rows of `a` and `b`.
pub fn squared_distances(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), b.nrows()));
    for (i, ra) in a.rows().into_iter().enumerate() {
        for (j, rb) in b.rows().into_iter().enumerate() {
            out[[i, j]] = ra.iter().zip(rb).map(|(x, y)| (x - y) * (x - y)).sum();
        }
    }
    out
}

/// Binary soft-margin machine `f(x) = sum_i coef_i K(x_i, x) - rho` with
/// `coef_i = alpha_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub coef: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

/// SMO with second-order working-set selection on a precomputed kernel.
/// `y` holds +1 / -1. All-same-sign input yields the constant `f = y`.
pub fn smo_binary(
    kernel: &Array2<f64>,
    y: &[f64],
    c: f64,
    tolerance: f64,
    max_iterations: usize,
) -> BinarySolution {
    let n = y.len();
    if y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0) {
        return BinarySolution {
            coef: vec![0.0; n],
            rho: -y[0],
            iterations: 0,
        };
    }
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let qd: Vec<f64> = (0..n).map(|i| kernel[[i, i]]).collect();
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iterations = 0;
    while iterations < max_iterations {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { !upper(alpha[t]) } else { !lower(alpha[t]) };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        if i_sel == usize::MAX {
            break;
        }
        let i = i_sel;
        let mut gmin = f64::INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut j_sel = usize::MAX;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { !lower(alpha[t]) } else { !upper(alpha[t]) };
            if !in_low {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let mut a = qd[i] + qd[t] - 2.0 * kernel[[i, t]];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj <= obj_min {
                    obj_min = obj;
                    j_sel = t;
                }
            }
        }
        if gmax - gmin < tolerance || j_sel == usize::MAX {
            break;
        }
        let j = j_sel;
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = kernel[[i, j]];
        if y[i] != y[j] {
            let mut quad = qd[i] + qd[j] - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = qd[i] + qd[j] - 2.0 * kij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += y[k] * (y[i] * kernel[[k, i]] * di + y[j] * kernel[[k, j]] * dj);
        }
    }
    if iterations >= max_iterations {
        log::warn!("SMO stopped at the iteration cap ({max_iterations})");
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    };
    BinarySolution {
        coef: alpha.iter().zip(y).map(|(a, yy)| a * yy).collect(),
        rho,
        iterations,
    }
}

/// Platt sigmoid `P(positive | f) = 1 / (1 + exp(a f + b))`, fit by the
/// regularized-target Newton method with backtracking.
pub fn platt_fit(decision: &[f64], positive: &[bool]) -> (f64, f64) {
    let prior1 = positive.iter().filter(|&&p| p).count() as f64;
    let prior0 = positive.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = positive.iter().map(|&p| if p { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = f * a + b;
                if z >= 0.0 {
                    ti * z + libm::log1p(libm::exp(-z))
                } else {
                    (ti - 1.0) * z + libm::log1p(libm::exp(z))
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, libm::log((prior0 + 1.0) / (prior1 + 1.0)));
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (TAU, TAU, 0.0, 0.0, 0.0);
        for (&f, &ti) in decision.iter().zip(&t) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = libm::exp(-z);
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = libm::exp(z);
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    (a, b)
}

fn sigmoid_prob(f: f64, (a, b): (f64, f64)) -> f64 {
    let z = f * a + b;
    let p = if z >= 0.0 {
        let e = libm::exp(-z);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(z))
    };
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// One-vs-rest RBF machines sharing a support set.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrMachines {
    pub gamma: f64,
    pub c: f64,
    /// Rows of the training data with a nonzero coefficient in any machine.
    pub support: Array2<f64>,
    /// `support.nrows() x n_classes`.
    pub coef: Array2<f64>,
    pub rho: Vec<f64>,
}

impl OvrMachines {
    fn fit(
        kernel: &Array2<f64>,
        x: ArrayView2<f64>,
        y: &[usize],
        n_classes: usize,
        c: f64,
        gamma: f64,
        config: &SvmConfig,
    ) -> Self {
        let n = y.len();
        let mut coef = Array2::zeros((n, n_classes));
        let mut rho = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            let yk: Vec<f64> = y.iter().map(|&c| if c == k { 1.0 } else { -1.0 }).collect();
            let sol = smo_binary(kernel, &yk, c, config.tolerance, config.max_iterations);
            for (i, v) in sol.coef.into_iter().enumerate() {
                coef[[i, k]] = v;
            }
            rho.push(sol.rho);
        }
        let keep: Vec<usize> = (0..n)
            .filter(|&i| coef.row(i).iter().any(|&v| v != 0.0))
            .collect();
        OvrMachines {
            gamma,
            c,
            support: x.select(Axis(0), &keep),
            coef: coef.select(Axis(0), &keep),
            rho,
        }
    }

    /// `n x n_classes` decision values.
    pub fn decision(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut k = squared_distances(x, self.support.view());
        k.mapv_inplace(|d| libm::exp(-self.gamma * d));
        let mut f = k.dot(&self.coef);
        for mut row in f.rows_mut() {
            for (v, r) in row.iter_mut().zip(&self.rho) {
                *v -= r;
            }
        }
        f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SvmModel {
    /// Single-class training data: posterior 1 for that class.
    Constant {
        class: usize,
        n_classes: usize,
        dim: usize,
    },
    Ovr {
        machines: OvrMachines,
        /// Platt parameters `(a, b)` per class.
        platt: Vec<(f64, f64)>,
        dim: usize,
    },
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        match self {
            SvmModel::Constant { n_classes, .. } => *n_classes,
            SvmModel::Ovr { platt, .. } => platt.len(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SvmModel::Constant { dim, .. } | SvmModel::Ovr { dim, .. } => *dim,
        }
    }

    fn check_dim(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.dim() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "model expects {} features, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Calibrated posteriors; rows sum to 1.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_dim(&x)?;
        match self {
            SvmModel::Constant {
                class, n_classes, ..
            } => {
                let mut p = Array2::zeros((x.nrows(), *n_classes));
                p.column_mut(*class).fill(1.0);
                Ok(p)
            }
            SvmModel::Ovr {
                machines, platt, ..
            } => Ok(calibrate(&machines.decision(x), platt)),
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.predict_proba(x)?))
    }

    /// Hash of every fitted number, for leakage instrumentation.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fingerprint::default();
        match self {
            SvmModel::Constant {
                class, n_classes, ..
            } => {
                h.u64(*class as u64);
                h.u64(*n_classes as u64);
            }
            SvmModel::Ovr {
                machines, platt, ..
            } => {
                h.f64s([machines.gamma, machines.c].iter());
                h.f64s(machines.support.iter());
                h.f64s(machines.coef.iter());
                h.f64s(machines.rho.iter());
                for (a, b) in platt {
                    h.f64s([*a, *b].iter());
                }
            }
        }
        h.finish()
    }
}

fn calibrate(decision: &Array2<f64>, platt: &[(f64, f64)]) -> Array2<f64> {
    let mut p = Array2::zeros(decision.raw_dim());
    for (mut out, f) in p.rows_mut().into_iter().zip(decision.rows()) {
        for ((o, &v), &ab) in out.iter_mut().zip(f).zip(platt) {
            *o = sigmoid_prob(v, ab);
        }
        let s: f64 = out.sum();
        out.mapv_inplace(|v| v / s);
    }
    p
}

pub(crate) fn argmax_rows(p: &Array2<f64>) -> Vec<usize> {
    p.rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (k, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

/// Everything a fit produced besides the model.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    pub c: f64,
    pub gamma: f64,
    /// Mean inner-fold macro-F1 of the chosen cell.
    pub inner_macro_f1: f64,
    /// Calibrated out-of-fold posteriors of the training rows under the
    /// chosen cell.
    pub oof_posteriors: Array2<f64>,
}

/// Grid search over `(C, gamma)` by mean inner-fold macro-F1 (first cell
/// in grid order wins ties), refit on all rows, and Platt calibration on
/// the chosen cell's out-of-fold decision values.
pub fn train_svm_rbf(
    x: ArrayView2<f64>,
    y: &[usize],
    n_classes: usize,
    config: &SvmConfig,
) -> Result<SvmFit> {
    config.validate()?;
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} rows against {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(invalid!("class {bad} outside 0..{n_classes}"));
    }
    let first = y[0];
    if y.iter().all(|&c| c == first) {
        log::warn!("training data holds only class {first}; using a constant predictor");
        let model = SvmModel::Constant {
            class: first,
            n_classes,
            dim: x.ncols(),
        };
        let oof = model.predict_proba(x)?;
        return Ok(SvmFit {
            model,
            c: f64::NAN,
            gamma: f64::NAN,
            inner_macro_f1: 1.0,
            oof_posteriors: oof,
        });
    }

    let n = y.len();
    let folds = stratified_folds(y, n_classes, config.inner_folds.min(n), config.seed);
    let k_folds = folds.iter().max().map_or(0, |&f| f + 1);
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..k_folds)
        .map(|f| {
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            (train, test)
        })
        .filter(|(tr, te)| !tr.is_empty() && !te.is_empty())
        .collect();
    let d2 = squared_distances(x, x);

    let kernels: Vec<Array2<f64>> = config
        .gamma_grid
        .iter()
        .map(|&g| d2.mapv(|d| libm::exp(-g * d)))
        .collect();

    let mut best: Option<(f64, usize, f64, Array2<f64>)> = None;
    for &c in &config.c_grid {
        for (gi, &gamma) in config.gamma_grid.iter().enumerate() {
            let kernel = &kernels[gi];
            let mut oof = Array2::zeros((n, n_classes));
            let mut score = 0.0;
            for (train, test) in &splits {
                let kt = kernel.select(Axis(0), train).select(Axis(1), train);
                let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
                let xt = x.select(Axis(0), train);
                let m = OvrMachines::fit(&kt, xt.view(), &yt, n_classes, c, gamma, config);
                let dec = m.decision(x.select(Axis(0), test).view());
                let truth: Vec<usize> = test.iter().map(|&i| y[i]).collect();
                score += macro_f1(&truth, &argmax_rows(&dec), n_classes)?;
                for (r, &i) in test.iter().enumerate() {
                    oof.row_mut(i).assign(&dec.row(r));
                }
            }
            let score = score / splits.len() as f64;
            log::trace!("grid C={c} gamma={gamma}: macro-F1 {score:.4}");
            if best.as_ref().is_none_or(|b| score > b.2) {
                best = Some((c, gi, score, oof));
            }
        }
    }
    let (c, gi, score, oof_dec) = best.expect("grids are nonempty");
    let gamma = config.gamma_grid[gi];

    let platt: Vec<(f64, f64)> = (0..n_classes)
        .map(|k| {
            let dec: Vec<f64> = oof_dec.column(k).to_vec();
            let pos: Vec<bool> = y.iter().map(|&c| c == k).collect();
            platt_fit(&dec, &pos)
        })
        .collect();
    let machines = OvrMachines::fit(&kernels[gi], x, y, n_classes, c, gamma, config);
    let oof_posteriors = calibrate(&oof_dec, &platt);
    Ok(SvmFit {
        model: SvmModel::Ovr {
            machines,
            platt,
            dim: x.ncols(),
        },
        c,
        gamma,
        inner_macro_f1: score,
        oof_posteriors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_point_machine_in_closed_form() {
        let k = array![[1.0, 0.5], [0.5, 1.0]];
        let free = smo_binary(&k, &[1.0, -1.0], 10.0, 1e-3, 1000);
        assert!((free.coef[0] - 2.0).abs() < 1e-12 && (free.coef[1] + 2.0).abs() < 1e-12);
        assert!(free.rho.abs() < 1e-12);
        let bounded = smo_binary(&k, &[1.0, -1.0], 1.0, 1e-3, 1000);
        assert_eq!(bounded.coef, vec![1.0, -1.0]);
        assert!(bounded.rho.abs() < 1e-12);
    }

    #[test]
    fn single_class_gives_constant_model() {
        let x = array![[0.0, 1.0], [2.0, 3.0]];
        let fit = train_svm_rbf(x.view(), &[1, 1], 3, &SvmConfig::default()).unwrap();
        assert!(matches!(fit.model, SvmModel::Constant { class: 1, .. }));
        let p = fit.model.predict_proba(array![[9.0, 9.0]].view()).unwrap();
        assert_eq!(p, array![[0.0, 1.0, 0.0]]);
    }

    #[test]
    fn platt_orders_by_decision_value() {
        let dec = [-3.0, -2.0, -1.5, -0.2, 0.3, 1.0, 2.0, 2.5];
        let pos = [false, false, false, true, false, true, true, true];
        let (a, b) = platt_fit(&dec, &pos);
        assert!(a < 0.0);
        let (hi, lo) = (5.0 / 6.0, 1.0 / 6.0);
        let (mut ga, mut gb) = (0.0, 0.0);
        for (&f, &p) in dec.iter().zip(&pos) {
            let t = if p { hi } else { lo };
            let prob = 1.0 / (1.0 + libm::exp(a * f + b));
            ga += f * (t - prob);
            gb += t - prob;
        }
        assert!(ga.abs() < 1e-5 && gb.abs() < 1e-5, "{ga} {gb}");
    }

    #[test]
    fn posteriors_are_normalized_and_pure() {
        let x = array![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [3.0, 3.0], [3.1, 3.0], [3.0, 3.1]];
        let y = [0, 0, 0, 1, 1, 1];
        let config = SvmConfig {
            inner_folds: 3,
            ..Default::default()
        };
        let fit = train_svm_rbf(x.view(), &y, 2, &config).unwrap();
        let q = array![[0.05, 0.05], [0.05, 0.05], [3.05, 3.05], [-7.0, 12.0]];
        let p = fit.model.predict_proba(q.view()).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v > 0.0 && v < 1.0));
        }
        assert_eq!(p.row(0), p.row(1));
        assert_eq!(fit.model.predict(q.view()).unwrap()[..3], [0, 0, 1]);
        assert!(fit.model.predict_proba(array![[1.0]].view()).is_err());
    }
}
