//! Gaussian (RBF) kernel and the "fine" scale preset.

use crate::svm::SvmError;
use crate::types::FeatureVector;

/// RBF kernel parameters: `K(x, y) = exp(-gamma * |x - y|^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelParams {
    gamma: f64,
}

impl KernelParams {
    pub fn rbf(gamma: f64) -> Result<Self, SvmError> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(SvmError::BadParam(format!(
                "gamma must be finite and positive, got {gamma}"
            )));
        }
        Ok(KernelParams { gamma })
    }

    /// The fine-Gaussian preset for `n_features` standardized inputs.
    pub fn fine_gaussian(n_features: usize) -> Self {
        KernelParams {
            gamma: fine_gaussian_gamma(n_features),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn eval(&self, x: &FeatureVector, y: &FeatureVector) -> f64 {
        (-self.gamma * x.dist2(y)).exp()
    }
}

pub fn rbf_kernel(x: &FeatureVector, y: &FeatureVector, params: &KernelParams) -> f64 {
    params.eval(x, y)
}

/// Kernel scale `s = sqrt(P) / 4` expressed as `gamma = 1 / (2 s^2) = 8 / P`.
///
/// # Panics
/// If `n_features` is zero.
pub fn fine_gaussian_gamma(n_features: usize) -> f64 {
    assert!(n_features >= 1, "need at least one feature");
    8.0 / n_features as f64
}
