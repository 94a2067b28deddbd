use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::eval::confusion::{accuracy, build_confusion, class_rates, ClassRates, ConfusionMatrix};
use crate::eval::EvalError;
use crate::svm::{train_ovo, KernelParams, PairReport, TrainConfig};
use crate::types::{GaitPhase, LabeledDataset, N_PHASES};

/// Row indices of one train/test split, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn check_k(k: usize) -> Result<(), EvalError> {
    if k < 2 {
        return Err(EvalError::BadK(k));
    }
    Ok(())
}

/// Turn a test-fold assignment per row into sorted train/test index lists.
fn folds_from_assignment(assign: &[usize], k: usize) -> Vec<Fold> {
    (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..assign.len()).partition(|&i| assign[i] == f);
            Fold { train, test }
        })
        .collect()
}

/// Stratified k-fold split. Each class's rows are shuffled by a ChaCha8
/// stream seeded with `seed`, then dealt round-robin to the folds. The
/// dealing for each class starts where the previous class stopped, which
/// also keeps total fold sizes within one row of each other.
pub fn stratified_kfold(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    check_k(k)?;
    let counts = data.phase_counts();
    if let Some(p) = GaitPhase::ALL.into_iter().find(|p| counts[p.index()] < k) {
        return Err(EvalError::TooFewPerClass(p));
    }
    let mut by_phase: Vec<Vec<usize>> = vec![Vec::new(); N_PHASES];
    for (i, r) in data.rows.iter().enumerate() {
        by_phase[r.phase.index()].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assign = vec![0usize; data.len()];
    let mut next = 0;
    for rows in &mut by_phase {
        rows.shuffle(&mut rng);
        for &i in rows.iter() {
            assign[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(folds_from_assignment(&assign, k))
}

/// Group k-fold split over the dataset's sources (one source per input
/// trial or file): every row of a source lands in the same test fold.
/// Sources are shuffled by `seed` and each goes to the currently smallest
/// fold.
pub fn group_kfold(data: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    check_k(k)?;
    let n_sources = data.sources.len().max(data.rows.iter().map(|r| r.source + 1).max().unwrap_or(0));
    let mut sizes = vec![0usize; n_sources];
    for r in &data.rows {
        sizes[r.source] += 1;
    }
    let mut present: Vec<usize> = (0..n_sources).filter(|&s| sizes[s] > 0).collect();
    if present.len() < k {
        return Err(EvalError::TooFewGroups {
            groups: present.len(),
            k,
        });
    }
    present.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of_source = vec![0usize; n_sources];
    let mut fold_sizes = vec![0usize; k];
    for s in present {
        let f = (0..k).min_by_key(|&f| (fold_sizes[f], f)).unwrap_or(0);
        fold_of_source[s] = f;
        fold_sizes[f] += sizes[s];
    }
    let assign: Vec<usize> = data.rows.iter().map(|r| fold_of_source[r.source]).collect();
    Ok(folds_from_assignment(&assign, k))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SplitBy {
    #[default]
    Stratified,
    /// Whole sources (subjects/files) per fold.
    Subject,
}

pub fn make_folds(data: &LabeledDataset, k: usize, seed: u64, split: SplitBy) -> Result<Vec<Fold>, EvalError> {
    match split {
        SplitBy::Stratified => stratified_kfold(data, k, seed),
        SplitBy::Subject => group_kfold(data, k, seed),
    }
}

#[derive(Clone, Debug)]
pub struct CvReport {
    pub k: usize,
    pub fold_accuracies: Vec<f64>,
    pub confusion: ConfusionMatrix,
    pub rates: ClassRates,
    pub accuracy: f64,
    /// Out-of-fold prediction, per-class score and fold of every row, in
    /// dataset order.
    pub predictions: Vec<GaitPhase>,
    pub scores: Vec<[f64; N_PHASES]>,
    pub fold_of_row: Vec<usize>,
    /// Pair training reports per fold.
    pub pair_reports: Vec<Vec<PairReport>>,
}

impl CvReport {
    pub fn all_converged(&self) -> bool {
        self.pair_reports.iter().flatten().all(|r| r.converged)
    }
}

pub fn cross_validate(
    data: &LabeledDataset,
    kernel: &KernelParams,
    cfg: &TrainConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport, EvalError> {
    let folds = stratified_kfold(data, k, seed)?;
    cross_validate_folds(data, kernel, cfg, &folds)
}

struct FoldOutcome {
    test: Vec<usize>,
    predictions: Vec<GaitPhase>,
    scores: Vec<[f64; N_PHASES]>,
    reports: Vec<PairReport>,
}

/// Train on each fold's train rows and predict its test rows. Folds run
/// concurrently; results are pooled in fold order.
pub fn cross_validate_folds(
    data: &LabeledDataset,
    kernel: &KernelParams,
    cfg: &TrainConfig,
    folds: &[Fold],
) -> Result<CvReport, EvalError> {
    if data.is_empty() {
        return Err(EvalError::Empty);
    }
    let outcomes: Vec<Result<FoldOutcome, EvalError>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let train = data.select(&fold.train);
            let fit = train_ovo(&train, kernel, cfg).map_err(|e| EvalError::Fold {
                fold: f,
                source: e,
            })?;
            let (predictions, scores) = fold
                .test
                .iter()
                .map(|&i| {
                    let p = fit.model.predict(&data.rows[i].features);
                    (p.phase, p.scores)
                })
                .unzip();
            Ok(FoldOutcome {
                test: fold.test.clone(),
                predictions,
                scores,
                reports: fit.reports,
            })
        })
        .collect();

    let n = data.len();
    let mut predictions: Vec<Option<GaitPhase>> = vec![None; n];
    let mut scores = vec![[0.0; N_PHASES]; n];
    let mut fold_of_row = vec![usize::MAX; n];
    let mut fold_accuracies = Vec::with_capacity(folds.len());
    let mut pair_reports = Vec::with_capacity(folds.len());
    for (f, outcome) in outcomes.into_iter().enumerate() {
        let o = outcome?;
        let truths: Vec<GaitPhase> = o.test.iter().map(|&i| data.rows[i].phase).collect();
        fold_accuracies.push(accuracy(&build_confusion(&truths, &o.predictions)?)?);
        for ((&i, p), s) in o.test.iter().zip(o.predictions).zip(o.scores) {
            if predictions[i].is_some() {
                return Err(EvalError::OverlappingFolds(i));
            }
            predictions[i] = Some(p);
            scores[i] = s;
            fold_of_row[i] = f;
        }
        pair_reports.push(o.reports);
    }
    let predictions: Vec<GaitPhase> = predictions
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(EvalError::UntestedRow(i)))
        .collect::<Result<_, _>>()?;
    let confusion = build_confusion(&data.phases(), &predictions)?;
    Ok(CvReport {
        k: folds.len(),
        fold_accuracies,
        rates: class_rates(&confusion),
        accuracy: accuracy(&confusion)?,
        confusion,
        predictions,
        scores,
        fold_of_row,
        pair_reports,
    })
}
