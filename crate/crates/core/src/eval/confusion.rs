use crate::eval::EvalError;
use crate::types::{GaitPhase, N_PHASES};

/// Counts indexed `[true][predicted]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; N_PHASES]; N_PHASES],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; N_PHASES]; N_PHASES]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn counts(&self) -> &[[u64; N_PHASES]; N_PHASES] {
        &self.counts
    }

    pub fn get(&self, truth: GaitPhase, predicted: GaitPhase) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn add(&mut self, truth: GaitPhase, predicted: GaitPhase) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N_PHASES).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, truth: GaitPhase) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn column_sum(&self, predicted: GaitPhase) -> u64 {
        self.counts.iter().map(|r| r[predicted.index()]).sum()
    }
}

pub fn build_confusion(truths: &[GaitPhase], preds: &[GaitPhase]) -> Result<ConfusionMatrix, EvalError> {
    if truths.len() != preds.len() {
        return Err(EvalError::LengthMismatch(truths.len(), preds.len()));
    }
    if truths.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truths.iter().zip(preds) {
        cm.add(t, p);
    }
    Ok(cm)
}

/// `trace / total`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    match cm.total() {
        0 => Err(EvalError::Empty),
        total => Ok(cm.trace() as f64 / total as f64),
    }
}

/// Precision-side and recall-side rates of one class. `None` marks a rate
/// whose denominator (column or row) is empty.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassRate {
    pub ppv: Option<f64>,
    pub fdr: Option<f64>,
    pub tpr: Option<f64>,
    pub fnr: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassRates {
    pub rates: [ClassRate; N_PHASES],
}

impl ClassRates {
    pub fn get(&self, phase: GaitPhase) -> &ClassRate {
        &self.rates[phase.index()]
    }
}

/// PPV is column-wise (`cm[c][c] / column_sum(c)`), TPR row-wise; FDR and
/// FNR are their complements.
pub fn class_rates(cm: &ConfusionMatrix) -> ClassRates {
    let rates = GaitPhase::ALL.map(|c| {
        let diag = cm.get(c, c) as f64;
        let ratio = |den: u64| (den > 0).then(|| diag / den as f64);
        let ppv = ratio(cm.column_sum(c));
        let tpr = ratio(cm.row_sum(c));
        ClassRate {
            ppv,
            fdr: ppv.map(|v| 1.0 - v),
            tpr,
            fnr: tpr.map(|v| 1.0 - v),
        }
    });
    ClassRates { rates }
}

/// A rate as a percentage with one decimal, or `n/a`.
pub fn format_pct(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{:.1}", 100.0 * r),
        None => "n/a".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use GaitPhase::*;

    #[test]
    fn perfect_predictions_are_diagonal() {
        let t = [MidSwing, PreSwing, PreSwing, InitialSwing, MidStance];
        let cm = build_confusion(&t, &t).unwrap();
        assert_eq!(cm.trace(), 5);
        assert_eq!(cm.total(), 5);
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        assert_eq!(cm.get(PreSwing, PreSwing), 2);
    }

    #[test]
    fn single_off_diagonal() {
        let cm = build_confusion(&[MidSwing], &[PreSwing]).unwrap();
        assert_eq!(cm.get(MidSwing, PreSwing), 1);
        assert_eq!(cm.total(), 1);
        assert_eq!(accuracy(&cm).unwrap(), 0.0);
    }

    #[test]
    fn input_errors() {
        assert_eq!(build_confusion(&[], &[]), Err(EvalError::Empty));
        assert_eq!(
            build_confusion(&[MidSwing], &[]),
            Err(EvalError::LengthMismatch(1, 0))
        );
        assert_eq!(accuracy(&ConfusionMatrix::default()), Err(EvalError::Empty));
    }

    #[test]
    fn undefined_rates_are_marked() {
        let cm = build_confusion(&[MidSwing, MidSwing], &[MidSwing, PreSwing]).unwrap();
        let r = class_rates(&cm);
        assert_eq!(r.get(MidSwing).ppv, Some(1.0));
        assert_eq!(r.get(MidSwing).tpr, Some(0.5));
        assert_eq!(r.get(PreSwing).ppv, Some(0.0));
        assert_eq!(r.get(PreSwing).tpr, None);
        assert_eq!(r.get(PreSwing).fnr, None);
        assert_eq!(r.get(TerminalSwing).ppv, None);
        assert_eq!(format_pct(r.get(TerminalSwing).ppv), "n/a");
        assert_eq!(format_pct(Some(0.93332)), "93.3");
    }
}
