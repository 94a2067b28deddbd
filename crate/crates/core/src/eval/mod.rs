//! Confusion matrices, per-class rates, ROC analysis, cross-validation and
//! report files.

pub mod confusion;
pub mod cv;
pub mod report;
pub mod roc;

pub use confusion::{accuracy, build_confusion, class_rates, format_pct, ClassRate, ClassRates, ConfusionMatrix};
pub use cv::{cross_validate, cross_validate_folds, group_kfold, make_folds, stratified_kfold, CvReport, Fold, SplitBy};
pub use report::{roc_svg, write_confusion_csv, write_cv_summary, write_rates_csv, write_roc_csv, write_roc_meta};
pub use roc::{roc_binary, roc_one_vs_rest, trapezoid_auc, RocCurve, RocPoint};

use crate::svm::SvmError;
use crate::types::GaitPhase;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("{0} truths but {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    Empty,
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("phase {0} has fewer rows than folds")]
    TooFewPerClass(GaitPhase),
    #[error("{groups} subjects cannot fill {k} folds")]
    TooFewGroups { groups: usize, k: usize },
    #[error("ROC needs at least one positive and one negative row")]
    DegenerateClass,
    #[error("score is NaN")]
    NanScore,
    #[error("row {0} appears in more than one test fold")]
    OverlappingFolds(usize),
    #[error("row {0} is in no test fold")]
    UntestedRow(usize),
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: SvmError,
    },
}
