//! One-vs-one multiclass SVM over the seven gait phases.

use rayon::prelude::*;

use crate::svm::smo::{smo_train, TrainConfig};
use crate::svm::standardize::Standardizer;
use crate::svm::{BinarySvmModel, KernelParams, SvmError};
use crate::types::{FeatureVector, GaitPhase, LabeledDataset, N_PHASES};

/// C(7, 2).
pub const N_PAIRS: usize = N_PHASES * (N_PHASES - 1) / 2;

/// Phase pairs `(a, b)`, `a < b` by index, in lexicographic order.
pub fn pairs() -> impl Iterator<Item = (GaitPhase, GaitPhase)> {
    (0..N_PHASES).flat_map(|a| {
        (a + 1..N_PHASES).map(move |b| (GaitPhase::ALL[a], GaitPhase::ALL[b]))
    })
}

/// Position of the pair `(a, b)` in [`pairs`] order, if `a < b`.
pub fn pair_index(a: GaitPhase, b: GaitPhase) -> Option<usize> {
    pairs().position(|p| p == (a, b))
}

/// A binary model separating `positive` (decision >= 0) from `negative`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairClassifier {
    pub positive: GaitPhase,
    pub negative: GaitPhase,
    pub model: BinarySvmModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OvoModel {
    standardizer: Standardizer,
    classifiers: Vec<PairClassifier>,
}

/// Per-class outcome of one prediction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub phase: GaitPhase,
    pub votes: [u32; N_PHASES],
    /// Accumulated `|decision value|` of the votes each class received.
    pub scores: [f64; N_PHASES],
}

impl OvoModel {
    /// Assemble a model; classifiers must cover the 21 pairs in
    /// lexicographic order with the lower phase index as positive class.
    pub fn new(standardizer: Standardizer, classifiers: Vec<PairClassifier>) -> Result<Self, SvmError> {
        if classifiers.len() != N_PAIRS {
            return Err(SvmError::BadParam(format!(
                "expected {N_PAIRS} classifiers, got {}",
                classifiers.len()
            )));
        }
        for (c, (a, b)) in classifiers.iter().zip(pairs()) {
            if (c.positive, c.negative) != (a, b) {
                return Err(SvmError::BadParam(format!(
                    "classifier ({}, {}) out of order, expected ({a}, {b})",
                    c.positive, c.negative
                )));
            }
        }
        let gamma = classifiers[0].model.kernel;
        if classifiers.iter().any(|c| c.model.kernel != gamma) {
            return Err(SvmError::BadParam("classifiers use different kernels".into()));
        }
        Ok(OvoModel {
            standardizer,
            classifiers,
        })
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn classifiers(&self) -> &[PairClassifier] {
        &self.classifiers
    }

    pub fn kernel(&self) -> KernelParams {
        self.classifiers[0].model.kernel
    }

    /// Predict from raw (unstandardized) features.
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let z = self.standardizer.apply(x);
        let decisions: Vec<f64> = self
            .classifiers
            .iter()
            .map(|c| c.model.decision_value(&z))
            .collect();
        vote(&self.classifiers, &decisions)
    }
}

/// Tally votes: each classifier votes for its positive class when the
/// decision is >= 0, else its negative class, and adds `|d|` to the voted
/// class's score. Most votes wins, then larger score, then lower index.
pub(crate) fn vote(classifiers: &[PairClassifier], decisions: &[f64]) -> Prediction {
    let mut votes = [0u32; N_PHASES];
    let mut scores = [0.0f64; N_PHASES];
    for (c, &d) in classifiers.iter().zip(decisions) {
        let winner = if d >= 0.0 { c.positive } else { c.negative };
        votes[winner.index()] += 1;
        scores[winner.index()] += d.abs();
    }
    let mut best = 0;
    for k in 1..N_PHASES {
        if votes[k] > votes[best] || (votes[k] == votes[best] && scores[k] > scores[best]) {
            best = k;
        }
    }
    Prediction {
        phase: GaitPhase::ALL[best],
        votes,
        scores,
    }
}

pub fn predict_ovo(model: &OvoModel, x: &FeatureVector) -> Prediction {
    model.predict(x)
}

/// Training diagnostics for one pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub positive: GaitPhase,
    pub negative: GaitPhase,
    pub n_rows: usize,
    pub n_support: usize,
    pub converged: bool,
    pub kkt_gap: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct OvoFit {
    pub model: OvoModel,
    pub reports: Vec<PairReport>,
}

impl OvoFit {
    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }

    /// Fail with the first non-converged pair, if any.
    pub fn require_converged(self) -> Result<OvoFit, SvmError> {
        match self.reports.iter().find(|r| !r.converged) {
            None => Ok(self),
            Some(r) => Err(SvmError::Pair {
                a: r.positive,
                b: r.negative,
                source: Box::new(SvmError::NoConvergence {
                    kkt_gap: r.kkt_gap,
                    iterations: r.iterations,
                }),
            }),
        }
    }
}

/// Fit the standardizer on all rows, then train the 21 pairwise models
/// (concurrently; each owns its data) on the rows of their two phases.
pub fn train_ovo(
    data: &LabeledDataset,
    kernel: &KernelParams,
    cfg: &TrainConfig,
) -> Result<OvoFit, SvmError> {
    cfg.validate()?;
    if let Some(p) = data.missing_phase() {
        return Err(SvmError::MissingPhase(p));
    }
    let standardizer = Standardizer::fit(&data.features())?;
    let z: Vec<FeatureVector> = data.rows.iter().map(|r| standardizer.apply(&r.features)).collect();
    let mut by_phase: Vec<Vec<usize>> = vec![Vec::new(); N_PHASES];
    for (i, r) in data.rows.iter().enumerate() {
        by_phase[r.phase.index()].push(i);
    }

    let pair_list: Vec<(GaitPhase, GaitPhase)> = pairs().collect();
    let results: Vec<Result<(PairClassifier, PairReport), SvmError>> = pair_list
        .par_iter()
        .map(|&(a, b)| {
            let mut idx: Vec<usize> = by_phase[a.index()]
                .iter()
                .chain(&by_phase[b.index()])
                .copied()
                .collect();
            idx.sort_unstable();
            let x: Vec<FeatureVector> = idx.iter().map(|&i| z[i]).collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if data.rows[i].phase == a { 1.0 } else { -1.0 })
                .collect();
            let fit = smo_train(&x, &y, kernel, cfg).map_err(|e| SvmError::Pair {
                a,
                b,
                source: Box::new(e),
            })?;
            let report = PairReport {
                positive: a,
                negative: b,
                n_rows: x.len(),
                n_support: fit.model.n_support(),
                converged: fit.converged,
                kkt_gap: fit.kkt_gap,
                iterations: fit.iterations,
            };
            Ok((
                PairClassifier {
                    positive: a,
                    negative: b,
                    model: fit.model,
                },
                report,
            ))
        })
        .collect();

    let mut classifiers = Vec::with_capacity(N_PAIRS);
    let mut reports = Vec::with_capacity(N_PAIRS);
    for r in results {
        let (c, rep) = r?;
        classifiers.push(c);
        reports.push(rep);
    }
    Ok(OvoFit {
        model: OvoModel::new(standardizer, classifiers)?,
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_order() {
        let all: Vec<_> = pairs().collect();
        assert_eq!(all.len(), 21);
        assert_eq!(all[0], (GaitPhase::MidSwing, GaitPhase::TerminalSwing));
        assert_eq!(all[5], (GaitPhase::MidSwing, GaitPhase::InitialSwing));
        assert_eq!(all[6], (GaitPhase::TerminalSwing, GaitPhase::LoadingResponse));
        assert_eq!(all[20], (GaitPhase::PreSwing, GaitPhase::InitialSwing));
        assert_eq!(pair_index(GaitPhase::PreSwing, GaitPhase::InitialSwing), Some(20));
        assert_eq!(pair_index(GaitPhase::InitialSwing, GaitPhase::PreSwing), None);
        for p in GaitPhase::ALL {
            assert_eq!(all.iter().filter(|(a, b)| *a == p || *b == p).count(), 6);
        }
    }

    fn stub(pos: GaitPhase, neg: GaitPhase) -> PairClassifier {
        PairClassifier {
            positive: pos,
            negative: neg,
            model: BinarySvmModel::new(
                vec![FeatureVector::default()],
                vec![1.0],
                0.0,
                KernelParams::rbf(1.0).unwrap(),
            )
            .unwrap(),
        }
    }

    fn stubs() -> Vec<PairClassifier> {
        pairs().map(|(a, b)| stub(a, b)).collect()
    }

    /// Decisions that make `winner` beat everyone it meets, everyone else
    /// losing to the lower index.
    fn decisions_for(winner: GaitPhase) -> Vec<f64> {
        pairs()
            .map(|(_, b)| if b == winner { -1.0 } else { 1.0 })
            .collect()
    }

    #[test]
    fn consistent_votes_pick_the_winner() {
        let c = stubs();
        for w in GaitPhase::ALL {
            let p = vote(&c, &decisions_for(w));
            assert_eq!(p.phase, w);
            assert_eq!(p.votes[w.index()], 6);
            assert_eq!(p.votes.iter().sum::<u32>(), 21);
        }
    }

    #[test]
    fn three_way_tie_goes_to_largest_margin() {
        use GaitPhase::*;
        let c = stubs();
        // A=MidSwing, B=TerminalSwing, C=LoadingResponse beat each of the other
        // four phases and each other cyclically: A>B, B>C, C>A. Each gets 5.
        let mut d: Vec<f64> = Vec::new();
        for (a, b) in pairs() {
            let top = |p: GaitPhase| p.index() <= 2;
            let v = match (a, b) {
                (MidSwing, TerminalSwing) => 0.5,        // A beats B
                (TerminalSwing, LoadingResponse) => 0.5, // B beats C
                (MidSwing, LoadingResponse) => -2.0,     // C beats A, large margin
                _ if top(a) && !top(b) => 0.1,
                _ if top(b) && !top(a) => -0.1,
                // bottom four: spread votes so none reaches 5
                _ => 0.1,
            };
            d.push(v);
        }
        let p = vote(&c, &d);
        assert_eq!(p.votes[0], 5);
        assert_eq!(p.votes[1], 5);
        assert_eq!(p.votes[2], 5);
        assert!(p.votes[3..].iter().all(|&v| v < 5));
        assert_eq!(p.phase, LoadingResponse);
        // rescaling every decision by a positive factor keeps the winner
        let scaled: Vec<f64> = d.iter().map(|v| v * 37.5).collect();
        assert_eq!(vote(&c, &scaled).phase, LoadingResponse);
    }

    #[test]
    fn full_tie_goes_to_lowest_index_and_zero_is_positive() {
        let c = stubs();
        let p = vote(&c, &[0.0; 21]);
        // zeros vote for the positive (lower) index everywhere
        assert_eq!(p.phase, GaitPhase::MidSwing);
        assert_eq!(p.votes, [6, 5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn model_validation() {
        let s = Standardizer::from_parts([0.0; 5], [1.0; 5]).unwrap();
        assert!(OvoModel::new(s, stubs()).is_ok());
        let mut c = stubs();
        c.swap(0, 1);
        assert!(OvoModel::new(s, c).is_err());
        assert!(OvoModel::new(s, stubs()[..20].to_vec()).is_err());
    }
}
