//! Gait-phase classification from shank IMU and knee-angle time series:
//! knee-peak labeling into seven phases, a one-vs-one Gaussian-kernel SVM
//! trained by SMO, and cross-validated evaluation.

pub mod eval;
pub mod ingest;
pub mod labeling;
pub mod manifest;
pub mod svm;
pub mod synth;
pub mod types;

pub use types::{FeatureVector, GaitPhase, LabeledDataset, LabeledRow, Trial, N_FEATURES, N_PHASES};
