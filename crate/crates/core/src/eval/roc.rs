use crate::eval::EvalError;
use crate::types::{GaitPhase, N_PHASES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Rows scoring at or above this are called positive. The first point
    /// uses `+inf`.
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Trapezoidal area under a polyline of ROC points.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// ROC of `scores` against binary labels. Rows are ranked by descending
/// score; rows sharing a score enter the curve together, producing one
/// point per distinct score.
pub fn roc_binary(positive: &[bool], scores: &[f64]) -> Result<RocCurve, EvalError> {
    if positive.len() != scores.len() {
        return Err(EvalError::LengthMismatch(positive.len(), scores.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::NanScore);
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::DegenerateClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold: s,
        });
    }
    let auc = trapezoid_auc(&points);
    Ok(RocCurve { points, auc })
}

/// One-vs-rest ROC for `target`, scoring each row by its `target` entry.
pub fn roc_one_vs_rest(
    truths: &[GaitPhase],
    scores: &[[f64; N_PHASES]],
    target: GaitPhase,
) -> Result<RocCurve, EvalError> {
    let positive: Vec<bool> = truths.iter().map(|&t| t == target).collect();
    let s: Vec<f64> = scores.iter().map(|row| row[target.index()]).collect();
    roc_binary(&positive, &s)
}
