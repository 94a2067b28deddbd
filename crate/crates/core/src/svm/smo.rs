//! Sequential minimal optimization for the soft-margin kernel SVM dual
//!
//! ```text
//! max  W(a) = sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
//! ```
//!
//! Outer loop follows Platt: alternate a pass over every example with
//! passes that only chase violators. Violation is measured on the bias-free
//! error `F_i = sum_j a_j y_j K_ij - y_i` through the two extremes
//! `b_up = min F` over the set that may move up and `b_low = max F` over the
//! set that may move down (Keerthi's second modification); the second
//! variable is always the extreme that maximizes `|F_1 - F_2|`. The error
//! cache is kept for every example, so the stopping test is exact:
//! `b_low - b_up <= kkt_tol`. Scans run in index order, so training is a
//! deterministic function of the input order.

use crate::svm::cache::KernelCache;
use crate::svm::kernel::KernelParams;
use crate::svm::{BinarySvmModel, SvmError};
use crate::types::FeatureVector;

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    /// Box constraint C.
    pub c: f64,
    /// Largest tolerated KKT violation `b_low - b_up`.
    pub kkt_tol: f64,
    /// Pair updates smaller than this (relative) count as no progress.
    pub eps_alpha: f64,
    /// Consecutive passes without a new best violation before giving up.
    pub max_passes: usize,
    /// Recorded for reproducibility; the solver itself draws no random numbers.
    pub seed: u64,
    /// Problems up to this many rows keep every kernel row.
    pub full_gram_max_rows: usize,
    /// Rows kept by the LRU cache for larger problems.
    pub cache_rows: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            c: 1.0,
            kkt_tol: 1e-3,
            eps_alpha: 1e-8,
            max_passes: 200,
            seed: 0,
            full_gram_max_rows: 8192,
            cache_rows: 2048,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::BadParam(format!("C must be positive, got {}", self.c)));
        }
        if !(self.kkt_tol.is_finite() && self.kkt_tol > 0.0) {
            return Err(SvmError::BadParam(format!(
                "kkt_tol must be positive, got {}",
                self.kkt_tol
            )));
        }
        if self.eps_alpha.is_nan() || self.eps_alpha < 0.0 {
            return Err(SvmError::BadParam("eps_alpha must be >= 0".into()));
        }
        if self.max_passes == 0 {
            return Err(SvmError::BadParam("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of one binary training run.
#[derive(Clone, Debug)]
pub struct BinaryFit {
    pub model: BinarySvmModel,
    /// Dual variable per training row (not pruned).
    pub alphas: Vec<f64>,
    /// Final `b_low - b_up` (non-positive means exactly optimal).
    pub kkt_gap: f64,
    pub converged: bool,
    /// Successful pair updates.
    pub iterations: usize,
    pub dual_objective: f64,
}

impl BinaryFit {
    /// Turn a non-converged fit into [`SvmError::NoConvergence`].
    pub fn require_converged(self) -> Result<BinaryFit, SvmError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SvmError::NoConvergence {
                kkt_gap: self.kkt_gap,
                iterations: self.iterations,
            })
        }
    }
}

/// Dual objective `W(a)` evaluated from scratch.
pub fn dual_objective(x: &[FeatureVector], y: &[f64], alphas: &[f64], kernel: &KernelParams) -> f64 {
    let mut quad = 0.0;
    for i in 0..x.len() {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..x.len() {
            if alphas[j] != 0.0 {
                quad += alphas[i] * alphas[j] * y[i] * y[j] * kernel.eval(&x[i], &x[j]);
            }
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

struct Solver<'a> {
    y: &'a [f64],
    c: f64,
    eps_alpha: f64,
    alpha: Vec<f64>,
    /// Bias-free error cache for every example.
    f: Vec<f64>,
    cache: KernelCache<'a>,
    i_up: usize,
    b_up: f64,
    i_low: usize,
    b_low: f64,
    steps: usize,
}

impl<'a> Solver<'a> {
    /// `a` may increase for positives or decrease for negatives.
    fn in_up(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] < self.c
        } else {
            self.alpha[i] > 0.0
        }
    }

    fn in_low(&self, i: usize) -> bool {
        if self.y[i] > 0.0 {
            self.alpha[i] > 0.0
        } else {
            self.alpha[i] < self.c
        }
    }

    fn refresh_extremes(&mut self) {
        self.b_up = f64::INFINITY;
        self.b_low = f64::NEG_INFINITY;
        for i in 0..self.f.len() {
            if self.in_up(i) && self.f[i] < self.b_up {
                self.b_up = self.f[i];
                self.i_up = i;
            }
            if self.in_low(i) && self.f[i] > self.b_low {
                self.b_low = self.f[i];
                self.i_low = i;
            }
        }
    }

    fn gap(&self) -> f64 {
        self.b_low - self.b_up
    }

    /// Recompute the error cache from the current alphas.
    fn recompute_errors(&mut self) {
        let n = self.f.len();
        let mut f: Vec<f64> = self.y.iter().map(|y| -y).collect();
        for j in 0..n {
            if self.alpha[j] == 0.0 {
                continue;
            }
            let row = self.cache.row(j);
            let w = self.alpha[j] * self.y[j];
            for (fi, k) in f.iter_mut().zip(row.iter()) {
                *fi += w * k;
            }
        }
        self.f = f;
        self.refresh_extremes();
    }

    fn examine(&mut self, i2: usize, tol2: f64) -> bool {
        let f2 = self.f[i2];
        let mut partner = None;
        if self.in_up(i2) && self.b_low - f2 > tol2 {
            partner = Some(self.i_low);
        }
        if self.in_low(i2) && f2 - self.b_up > tol2 {
            partner = Some(self.i_up);
        }
        let Some(mut i1) = partner else { return false };
        if self.in_up(i2) && self.in_low(i2) {
            i1 = if self.b_low - f2 > f2 - self.b_up {
                self.i_low
            } else {
                self.i_up
            };
        }
        self.take_step(i1, i2)
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let c = self.c;
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (f1, f2) = (self.f[i1], self.f[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= 0.0 {
            return false;
        }
        let row1 = self.cache.row(i1);
        let row2 = self.cache.row(i2);
        let (k11, k12, k22) = (row1[i1], row1[i2], row2[i2]);
        let eta = k11 + k22 - 2.0 * k12;
        // W along the feasible line, as a function of the step t on a2:
        // W(t) = W(0) + t * y2 * (f1 - f2) - eta * t^2 / 2
        let slope = y2 * (f1 - f2);
        let mut a2_new = if eta > 0.0 {
            (a2 + slope / eta).clamp(lo, hi)
        } else {
            let w = |t: f64| t * slope - 0.5 * eta * t * t;
            let (w_lo, w_hi) = (w(lo - a2), w(hi - a2));
            if w_lo > w_hi + self.eps_alpha {
                lo
            } else if w_hi > w_lo + self.eps_alpha {
                hi
            } else {
                a2
            }
        };
        let snap = 1e-12 * c;
        if a2_new < snap {
            a2_new = 0.0;
        } else if a2_new > c - snap {
            a2_new = c;
        }
        if (a2_new - a2).abs() < self.eps_alpha * (a2_new + a2 + self.eps_alpha) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < snap {
            a1_new = 0.0;
        } else if a1_new > c - snap {
            a1_new = c;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        for (fi, (k1, k2)) in self.f.iter_mut().zip(row1.iter().zip(row2.iter())) {
            *fi += d1 * k1 + d2 * k2;
        }
        self.refresh_extremes();
        self.steps += 1;
        true
    }
}

/// Train a binary soft-margin SVM. `labels` must be +1 or -1 and both
/// values must occur; rows are expected to be standardized already.
///
/// A run that stops on the pass budget is still returned, with
/// `converged == false`.
pub fn smo_train(
    x: &[FeatureVector],
    labels: &[f64],
    kernel: &KernelParams,
    cfg: &TrainConfig,
) -> Result<BinaryFit, SvmError> {
    cfg.validate()?;
    if x.len() != labels.len() {
        return Err(SvmError::LengthMismatch {
            rows: x.len(),
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
        return Err(SvmError::InvalidLabel(bad));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(SvmError::SingleClass);
    }
    if x.iter().any(|r| !r.is_finite()) {
        return Err(SvmError::BadParam("non-finite feature value".into()));
    }

    let n = x.len();
    let mut s = Solver {
        y: labels,
        c: cfg.c,
        eps_alpha: cfg.eps_alpha,
        alpha: vec![0.0; n],
        f: labels.iter().map(|y| -y).collect(),
        cache: KernelCache::new(x, *kernel, cfg.full_gram_max_rows, cfg.cache_rows),
        i_up: 0,
        b_up: 0.0,
        i_low: 0,
        b_low: 0.0,
        steps: 0,
    };
    s.refresh_extremes();

    let tol = cfg.kkt_tol;
    let mut best_gap = f64::INFINITY;
    let mut stale_passes = 0usize;
    let mut converged = false;
    let mut examine_all = true;

    'outer: loop {
        if examine_all {
            let mut changed = 0usize;
            for i in 0..n {
                if s.examine(i, tol) {
                    changed += 1;
                }
            }
            if changed == 0 {
                // the incremental cache may have drifted; confirm on fresh errors
                s.recompute_errors();
                if s.gap() <= tol {
                    converged = true;
                    break;
                }
            }
        } else {
            // chase the most violating pair until it clears; every n steps count as a pass
            let mut in_pass = 0usize;
            while s.gap() > tol && s.take_step(s.i_up, s.i_low) {
                in_pass += 1;
                if in_pass == n {
                    in_pass = 0;
                    if !progress(s.gap(), &mut best_gap, &mut stale_passes, cfg.max_passes) {
                        break 'outer;
                    }
                }
            }
        }
        examine_all = !examine_all;
        if !progress(s.gap(), &mut best_gap, &mut stale_passes, cfg.max_passes) {
            break;
        }
    }

    s.recompute_errors();
    let kkt_gap = s.gap();
    if kkt_gap <= tol {
        converged = true;
    }
    let bias = bias(&s);
    let dual_objective = s.alpha.iter().sum::<f64>()
        - 0.5
            * s.alpha
                .iter()
                .zip(labels)
                .zip(&s.f)
                .map(|((a, y), f)| a * y * (f + y))
                .sum::<f64>();
    let model = BinarySvmModel::from_dual(x, labels, &s.alpha, bias, *kernel)?;
    Ok(BinaryFit {
        model,
        alphas: s.alpha,
        kkt_gap,
        converged,
        iterations: s.steps,
        dual_objective,
    })
}

/// Record a pass; false once `max_passes` passes in a row failed to improve
/// the best violation seen.
fn progress(gap: f64, best: &mut f64, stale: &mut usize, max_passes: usize) -> bool {
    if gap < *best {
        *best = gap;
        *stale = 0;
    } else {
        *stale += 1;
    }
    *stale < max_passes
}

/// Average `-F_j` over free vectors; without free vectors, the midpoint of
/// the interval the KKT conditions leave for `b`.
fn bias(s: &Solver) -> f64 {
    let (sum, count) = (0..s.alpha.len())
        .filter(|&i| s.alpha[i] > 0.0 && s.alpha[i] < s.c)
        .fold((0.0, 0usize), |(sum, n), i| (sum - s.f[i], n + 1));
    if count > 0 {
        return sum / count as f64;
    }
    match (s.b_up.is_finite(), s.b_low.is_finite()) {
        (true, true) => -0.5 * (s.b_up + s.b_low),
        (true, false) => -s.b_up,
        (false, true) => -s.b_low,
        (false, false) => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: [f64; 5]) -> FeatureVector {
        FeatureVector(v)
    }

    #[test]
    fn symmetric_two_point_problem() {
        let x = [fv([-1.0, 0.0, 0.0, 0.0, 0.0]), fv([1.0, 0.0, 0.0, 0.0, 0.0])];
        let y = [-1.0, 1.0];
        let kernel = KernelParams::rbf(0.5).unwrap();
        let cfg = TrainConfig {
            c: 10.0,
            ..TrainConfig::default()
        };
        let fit = smo_train(&x, &y, &kernel, &cfg).unwrap();
        // W(a) = 2a - a^2 (K11 - K12)  =>  a* = 1 / (K11 - K12)
        let k12 = (-2.0f64).exp();
        let expected = (1.0 / (1.0 - k12)).min(10.0);
        assert!(fit.converged);
        assert!((fit.alphas[0] - expected).abs() < 1e-12, "{:?}", fit.alphas);
        assert!((fit.alphas[1] - expected).abs() < 1e-12);
        assert!(fit.model.bias.abs() < 1e-12);
        assert!(fit.model.decision_value(&fv([0.0; 5])).abs() < 1e-9);
        assert!((fit.model.decision_value(&x[1]) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn box_constraint_binds_for_small_c() {
        let x = [fv([-1.0, 0.0, 0.0, 0.0, 0.0]), fv([1.0, 0.0, 0.0, 0.0, 0.0])];
        let y = [-1.0, 1.0];
        let kernel = KernelParams::rbf(0.5).unwrap();
        let cfg = TrainConfig {
            c: 0.25,
            ..TrainConfig::default()
        };
        let fit = smo_train(&x, &y, &kernel, &cfg).unwrap();
        assert_eq!(fit.alphas, vec![0.25, 0.25]);
        assert!(fit.converged);
        assert!(fit.model.bias.abs() < 1e-12);
    }

    #[test]
    fn input_errors() {
        let x = [fv([0.0; 5]), fv([1.0; 5])];
        let k = KernelParams::rbf(1.0).unwrap();
        let cfg = TrainConfig::default();
        assert!(matches!(smo_train(&x, &[1.0, 1.0], &k, &cfg), Err(SvmError::SingleClass)));
        assert!(matches!(smo_train(&x, &[1.0, 0.0], &k, &cfg), Err(SvmError::InvalidLabel(_))));
        assert!(matches!(smo_train(&x, &[1.0], &k, &cfg), Err(SvmError::LengthMismatch { .. })));
        let bad = TrainConfig { c: 0.0, ..cfg };
        assert!(matches!(smo_train(&x, &[1.0, -1.0], &k, &bad), Err(SvmError::BadParam(_))));
    }

    #[test]
    fn pass_budget_exhaustion_is_flagged() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let x: Vec<FeatureVector> = (0..200)
            .map(|_| fv(std::array::from_fn(|_| rng.random_range(-1.0..1.0))))
            .collect();
        let y: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let k = KernelParams::rbf(1.6).unwrap();
        let cfg = TrainConfig {
            c: 100.0,
            kkt_tol: 1e-14,
            max_passes: 1,
            ..TrainConfig::default()
        };
        let fit = smo_train(&x, &y, &k, &cfg).unwrap();
        assert!(!fit.converged);
        assert!(matches!(fit.require_converged(), Err(SvmError::NoConvergence { .. })));
    }

    #[test]
    fn lru_cache_path_matches_full_gram() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x: Vec<FeatureVector> = (0..80)
            .map(|_| fv(std::array::from_fn(|_| rng.random_range(-2.0..2.0))))
            .collect();
        let y: Vec<f64> = x.iter().map(|r| if r.0[0] + r.0[1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let k = KernelParams::rbf(0.5).unwrap();
        let full = smo_train(&x, &y, &k, &TrainConfig::default()).unwrap();
        let lru_cfg = TrainConfig {
            full_gram_max_rows: 10,
            cache_rows: 7,
            ..TrainConfig::default()
        };
        let lru = smo_train(&x, &y, &k, &lru_cfg).unwrap();
        assert_eq!(full.alphas, lru.alphas);
        assert_eq!(full.model.bias, lru.model.bias);
    }

    #[test]
    fn objective_matches_direct_evaluation() {
        let x = [
            fv([0.0, 0.0, 0.0, 0.0, 0.0]),
            fv([1.0, 0.5, 0.0, 0.0, 0.0]),
            fv([0.2, 1.0, 0.3, 0.0, 0.0]),
            fv([1.5, 1.5, 0.0, 0.1, 0.0]),
        ];
        let y = [1.0, -1.0, 1.0, -1.0];
        let k = KernelParams::rbf(1.0).unwrap();
        let fit = smo_train(&x, &y, &k, &TrainConfig::default()).unwrap();
        let direct = dual_objective(&x, &y, &fit.alphas, &k);
        assert!((fit.dual_objective - direct).abs() < 1e-12);
    }
}
