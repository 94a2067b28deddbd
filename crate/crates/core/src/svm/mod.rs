//! Gaussian-kernel SVM: binary SMO training and the one-vs-one wrapper
//! over the seven gait phases.

mod cache;
pub mod kernel;
pub mod model_io;
pub mod ovo;
pub mod smo;
pub mod standardize;

pub use kernel::{fine_gaussian_gamma, rbf_kernel, KernelParams};
pub use model_io::{load_model, read_model, save_model, write_model, ModelIoError};
pub use ovo::{
    pair_index, pairs, predict_ovo, train_ovo, OvoFit, OvoModel, PairClassifier, PairReport,
    Prediction, N_PAIRS,
};
pub use smo::{dual_objective, smo_train, BinaryFit, TrainConfig};
pub use standardize::Standardizer;

use crate::types::{FeatureVector, GaitPhase};

/// Dual coefficients at or below this magnitude are dropped from models.
pub const ALPHA_PRUNE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("labels must be +1 or -1, got {0}")]
    InvalidLabel(f64),
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("feature {0} has zero variance")]
    ZeroVariance(usize),
    #[error("{0}")]
    BadParam(String),
    #[error("no training rows for phase {0}")]
    MissingPhase(GaitPhase),
    #[error("SMO stopped with KKT violation {kkt_gap:.3e} after {iterations} updates")]
    NoConvergence { kkt_gap: f64, iterations: usize },
    #[error("pair ({a}, {b}): {source}")]
    Pair {
        a: GaitPhase,
        b: GaitPhase,
        #[source]
        source: Box<SvmError>,
    },
    #[error("model has no support vectors")]
    NoSupportVectors,
}

/// A trained binary classifier: `f(x) = sum_i coef_i K(sv_i, x) + bias`,
/// with `coef_i = alpha_i * y_i`. Positive decision values select the
/// positive class.
#[derive(Clone, Debug, PartialEq)]
pub struct BinarySvmModel {
    pub support_vectors: Vec<FeatureVector>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: KernelParams,
}

impl BinarySvmModel {
    /// Keep the rows whose dual variable exceeds [`ALPHA_PRUNE`].
    pub fn from_dual(
        x: &[FeatureVector],
        labels: &[f64],
        alphas: &[f64],
        bias: f64,
        kernel: KernelParams,
    ) -> Result<Self, SvmError> {
        let (support_vectors, dual_coefs): (Vec<_>, Vec<_>) = x
            .iter()
            .zip(labels.iter().zip(alphas))
            .filter(|(_, (_, a))| **a > ALPHA_PRUNE)
            .map(|(sv, (y, a))| (*sv, a * y))
            .unzip();
        BinarySvmModel::new(support_vectors, dual_coefs, bias, kernel)
    }

    pub fn new(
        support_vectors: Vec<FeatureVector>,
        dual_coefs: Vec<f64>,
        bias: f64,
        kernel: KernelParams,
    ) -> Result<Self, SvmError> {
        if support_vectors.len() != dual_coefs.len() {
            return Err(SvmError::LengthMismatch {
                rows: support_vectors.len(),
                labels: dual_coefs.len(),
            });
        }
        if support_vectors.is_empty() {
            return Err(SvmError::NoSupportVectors);
        }
        if !bias.is_finite() || dual_coefs.iter().any(|c| !c.is_finite()) {
            return Err(SvmError::BadParam("non-finite model coefficient".into()));
        }
        Ok(BinarySvmModel {
            support_vectors,
            dual_coefs,
            bias,
            kernel,
        })
    }

    pub fn n_support(&self) -> usize {
        self.support_vectors.len()
    }

    /// `sum_i coef_i K(sv_i, x) + bias` for a standardized `x`.
    pub fn decision_value(&self, x: &FeatureVector) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// Same model with every coefficient and the bias negated.
    pub fn negated(&self) -> BinarySvmModel {
        BinarySvmModel {
            support_vectors: self.support_vectors.clone(),
            dual_coefs: self.dual_coefs.iter().map(|c| -c).collect(),
            bias: -self.bias,
            kernel: self.kernel,
        }
    }
}

pub fn decision_value(model: &BinarySvmModel, x: &FeatureVector) -> f64 {
    model.decision_value(x)
}
