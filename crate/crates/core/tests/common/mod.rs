//! Shared test oracles and data builders.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaitsvm::eval::ConfusionMatrix;
use gaitsvm::svm::{KernelParams, Standardizer};
use gaitsvm::{FeatureVector, GaitPhase, LabeledDataset, LabeledRow};

/// Reference 7x7 confusion counts, rows and columns in alphabetical order:
/// InitialSwing, LoadingResponse, MidStance, MidSwing, PreSwing,
/// TerminalStance, TerminalSwing. Blank cells are zero.
pub const REFERENCE_COUNTS: [[u64; 7]; 7] = [
    [4451, 1, 63, 63, 55, 0, 60],
    [2, 2281, 144, 0, 3, 6, 62],
    [68, 104, 6151, 0, 149, 377, 95],
    [72, 0, 5, 3013, 0, 0, 69],
    [109, 4, 63, 0, 2532, 444, 1],
    [2, 9, 433, 0, 312, 5508, 0],
    [65, 87, 72, 85, 0, 0, 4406],
];

pub const ALPHABETICAL: [GaitPhase; 7] = [
    GaitPhase::InitialSwing,
    GaitPhase::LoadingResponse,
    GaitPhase::MidStance,
    GaitPhase::MidSwing,
    GaitPhase::PreSwing,
    GaitPhase::TerminalStance,
    GaitPhase::TerminalSwing,
];

/// The reference counts expanded into (truth, prediction) pairs.
pub fn reference_pairs() -> (Vec<GaitPhase>, Vec<GaitPhase>) {
    let mut truths = Vec::new();
    let mut preds = Vec::new();
    for (r, row) in REFERENCE_COUNTS.iter().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            for _ in 0..n {
                truths.push(ALPHABETICAL[r]);
                preds.push(ALPHABETICAL[c]);
            }
        }
    }
    (truths, preds)
}

/// The reference counts re-indexed into canonical phase order.
pub fn reference_matrix() -> ConfusionMatrix {
    let mut counts = [[0u64; 7]; 7];
    for (r, row) in REFERENCE_COUNTS.iter().enumerate() {
        for (c, &n) in row.iter().enumerate() {
            counts[ALPHABETICAL[r].index()][ALPHABETICAL[c].index()] = n;
        }
    }
    ConfusionMatrix::from_counts(counts)
}

/// Exact maximizer of the SVM dual
/// `W(a) = sum a - 1/2 sum_ij a_i a_j y_i y_j K_ij`, `0 <= a <= C`,
/// `sum a_i y_i = 0`, by enumerating which variables sit at 0, at C or
/// strictly between, and solving the stationarity system of each pattern.
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn gram(x: &[FeatureVector], kernel: &KernelParams) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = (0..5).map(|k| (x[i].0[k] - x[j].0[k]).powi(2)).sum();
        (-kernel.gamma() * d2).exp()
    })
}

pub fn dual_value(k: &DMatrix<f64>, y: &[f64], a: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[(i, j)];
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

pub fn brute_force_dual(x: &[FeatureVector], y: &[f64], kernel: &KernelParams, c: f64) -> DualSolution {
    let n = x.len();
    let k = gram(x, kernel);
    let mut best: Option<DualSolution> = None;
    let mut pattern = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut rest = code;
        for p in pattern.iter_mut() {
            *p = (rest % 3) as u8; // 0: at zero, 1: at C, 2: free
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 2).collect();
        let mut a: Vec<f64> = pattern.iter().map(|&p| if p == 1 { c } else { 0.0 }).collect();
        let mut bias = f64::NAN;
        if free.is_empty() {
            let s: f64 = a.iter().zip(y).map(|(a, y)| a * y).sum();
            if s.abs() > 1e-12 * c.max(1.0) {
                continue;
            }
        } else {
            let m = free.len();
            let mut sys = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    sys[(r, s)] = y[i] * y[j] * k[(i, j)];
                }
                sys[(r, m)] = y[i];
                sys[(m, r)] = y[i];
                let bound: f64 = (0..n)
                    .filter(|&j| pattern[j] == 1)
                    .map(|j| y[i] * y[j] * k[(i, j)] * c)
                    .sum();
                rhs[r] = 1.0 - bound;
            }
            rhs[m] = -(0..n).filter(|&j| pattern[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = sys.lu().solve(&rhs) else {
                continue;
            };
            if free.iter().enumerate().any(|(r, _)| sol[r] < -1e-12 || sol[r] > c + 1e-12) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                a[i] = sol[r].clamp(0.0, c);
            }
            bias = sol[m];
        }
        let objective = dual_value(&k, y, &a);
        if best.as_ref().map_or(true, |b| objective > b.objective) {
            if bias.is_nan() {
                bias = bias_midpoint(&k, y, &a, c);
            }
            best = Some(DualSolution {
                alphas: a,
                bias,
                objective,
            });
        }
    }
    best.expect("the dual always has a feasible point")
}

/// Midpoint of the bias interval allowed by the KKT conditions when no
/// variable is free.
fn bias_midpoint(k: &DMatrix<f64>, y: &[f64], a: &[f64], c: f64) -> f64 {
    let n = y.len();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let g: f64 = (0..n).map(|j| a[j] * y[j] * k[(i, j)]).sum();
        // y (g + b) >= 1 when a = 0; <= 1 when a = C
        let edge = y[i] - g;
        let at_zero = a[i] <= 0.0;
        let at_c = a[i] >= c;
        if (at_zero && y[i] > 0.0) || (at_c && y[i] < 0.0) {
            lo = lo.max(edge);
        } else if (at_zero && y[i] < 0.0) || (at_c && y[i] > 0.0) {
            hi = hi.min(edge);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

pub fn oracle_decision(
    x: &[FeatureVector],
    y: &[f64],
    sol: &DualSolution,
    kernel: &KernelParams,
    probe: &FeatureVector,
) -> f64 {
    x.iter()
        .zip(y)
        .zip(&sol.alphas)
        .map(|((xi, yi), a)| {
            let d2: f64 = (0..5).map(|k| (xi.0[k] - probe.0[k]).powi(2)).sum();
            a * yi * (-kernel.gamma() * d2).exp()
        })
        .sum::<f64>()
        + sol.bias
}

/// AUC as the Mann-Whitney statistic: the fraction of (positive, negative)
/// pairs ranked correctly, ties counting one half.
pub fn mann_whitney_auc(positive: &[bool], scores: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, scale: f64) -> FeatureVector {
    FeatureVector(std::array::from_fn(|_| rng.random_range(-scale..scale)))
}

/// A small binary problem with both labels, standardized.
pub fn random_binary_problem(rng: &mut ChaCha8Rng, n: usize) -> (Vec<FeatureVector>, Vec<f64>) {
    loop {
        let x: Vec<FeatureVector> = (0..n).map(|_| random_vector(rng, 1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
            continue;
        }
        let s = Standardizer::fit(&x).expect("random rows have variance");
        return (s.apply_all(&x), y);
    }
}

/// Two overlapping Gaussian-ish blobs with `n` rows.
pub fn overlapping_binary(rng: &mut ChaCha8Rng, n: usize, separation: f64) -> (Vec<FeatureVector>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut v = random_vector(rng, 1.0);
        v.0[0] += label * separation;
        v.0[2] -= label * separation * 0.5;
        x.push(v);
        y.push(label);
    }
    (x, y)
}

/// Seven tight clusters far apart, `per_class` rows each.
pub fn separable_clusters(seed: u64, per_class: usize) -> LabeledDataset {
    let mut rng = rng(seed);
    let mut rows = Vec::new();
    for (c, phase) in GaitPhase::ALL.iter().enumerate() {
        let centre = [
            10.0 * (c as f64),
            10.0 * ((c * 3) % 7) as f64,
            -5.0 * (c as f64),
            20.0 * ((c * 5) % 7) as f64,
            30.0 * (c as f64).cos(),
        ];
        for _ in 0..per_class {
            let x = FeatureVector(std::array::from_fn(|k| centre[k] + rng.random_range(-0.2..0.2)));
            rows.push(LabeledRow {
                time: rows.len() as f64 * 0.005,
                features: x,
                phase: *phase,
                source: 0,
            });
        }
    }
    LabeledDataset {
        rows,
        sources: vec!["clusters".to_string()],
    }
}
