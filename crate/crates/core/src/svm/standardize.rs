//! Per-feature z-scoring (population standard deviation).

use crate::svm::SvmError;
use crate::types::{FeatureVector, N_FEATURES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Standardizer {
    means: [f64; N_FEATURES],
    stds: [f64; N_FEATURES],
}

impl Standardizer {
    /// Rebuild from stored parameters; every std must be positive and finite.
    pub fn from_parts(means: [f64; N_FEATURES], stds: [f64; N_FEATURES]) -> Result<Self, SvmError> {
        if let Some(i) = stds.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(SvmError::ZeroVariance(i));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(SvmError::BadParam("non-finite standardizer mean".into()));
        }
        Ok(Standardizer { means, stds })
    }

    pub fn fit(rows: &[FeatureVector]) -> Result<Self, SvmError> {
        if rows.len() < 2 {
            return Err(SvmError::TooFewRows(rows.len()));
        }
        let n = rows.len() as f64;
        let mut means = [0.0; N_FEATURES];
        let mut stds = [0.0; N_FEATURES];
        for j in 0..N_FEATURES {
            let mean = rows.iter().map(|r| r.0[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.0[j] - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            // identical values can leave roundoff-sized variance behind
            if std.is_nan() || std <= 1e-12 * mean.abs().max(1.0) {
                return Err(SvmError::ZeroVariance(j));
            }
            means[j] = mean;
            stds[j] = std;
        }
        Ok(Standardizer { means, stds })
    }

    pub fn apply(&self, x: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; N_FEATURES];
        for (j, o) in out.iter_mut().enumerate() {
            *o = (x.0[j] - self.means[j]) / self.stds[j];
        }
        FeatureVector(out)
    }

    pub fn apply_all(&self, rows: &[FeatureVector]) -> Vec<FeatureVector> {
        rows.iter().map(|r| self.apply(r)).collect()
    }

    pub fn means(&self) -> &[f64; N_FEATURES] {
        &self.means
    }

    pub fn stds(&self) -> &[f64; N_FEATURES] {
        &self.stds
    }
}
