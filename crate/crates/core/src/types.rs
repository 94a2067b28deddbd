//! Shared domain types: the seven gait phases, the five-channel feature
//! vector, uniformly sampled trials and labeled datasets.

use std::fmt;
use std::str::FromStr;

/// Number of predictors per time sample.
pub const N_FEATURES: usize = 5;

/// Number of gait phases.
pub const N_PHASES: usize = 7;

/// Gait phases in canonical cyclic order.
///
/// A cycle runs peak-to-peak on knee flexion, so it starts at `MidSwing`
/// (peak flexion sits at the InitialSwing/MidSwing boundary) and ends with
/// `InitialSwing`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum GaitPhase {
    MidSwing = 0,
    TerminalSwing = 1,
    LoadingResponse = 2,
    MidStance = 3,
    TerminalStance = 4,
    PreSwing = 5,
    InitialSwing = 6,
}

impl GaitPhase {
    /// All phases in canonical order.
    pub const ALL: [GaitPhase; N_PHASES] = [
        GaitPhase::MidSwing,
        GaitPhase::TerminalSwing,
        GaitPhase::LoadingResponse,
        GaitPhase::MidStance,
        GaitPhase::TerminalStance,
        GaitPhase::PreSwing,
        GaitPhase::InitialSwing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<GaitPhase, PhaseError> {
        GaitPhase::ALL
            .get(index)
            .copied()
            .ok_or(PhaseError::IndexOutOfRange(index))
    }

    /// Stable name used in every file format.
    pub fn name(self) -> &'static str {
        match self {
            GaitPhase::MidSwing => "MidSwing",
            GaitPhase::TerminalSwing => "TerminalSwing",
            GaitPhase::LoadingResponse => "LoadingResponse",
            GaitPhase::MidStance => "MidStance",
            GaitPhase::TerminalStance => "TerminalStance",
            GaitPhase::PreSwing => "PreSwing",
            GaitPhase::InitialSwing => "InitialSwing",
        }
    }
}

impl fmt::Display for GaitPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GaitPhase {
    type Err = PhaseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GaitPhase::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| PhaseError::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error("phase index {0} outside 0..6")]
    IndexOutOfRange(usize),
    #[error("unknown phase name `{0}`")]
    UnknownName(String),
}

/// The five predictors of one time sample, in fixed order:
/// shank acc X/Y/Z, shank gyro X, knee angle.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub const NAMES: [&'static str; N_FEATURES] = [
        "shank_acc_x",
        "shank_acc_y",
        "shank_acc_z",
        "shank_gyro_x",
        "knee_angle",
    ];

    pub fn new(acc_x: f64, acc_y: f64, acc_z: f64, gyro_x: f64, knee_angle: f64) -> Self {
        FeatureVector([acc_x, acc_y, acc_z, gyro_x, knee_angle])
    }

    pub fn knee_angle(&self) -> f64 {
        self.0[4]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Squared Euclidean distance.
    pub fn dist2(&self, other: &FeatureVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<[f64; N_FEATURES]> for FeatureVector {
    fn from(v: [f64; N_FEATURES]) -> Self {
        FeatureVector(v)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrialError {
    #[error("trial has no samples")]
    Empty,
    #[error("sample rate must be positive and finite, got {0}")]
    BadSampleRate(f64),
    #[error("non-finite feature value at sample {0}")]
    NonFinite(usize),
}

/// A uniformly sampled time series of feature vectors from one recording.
///
/// Sample `k` sits at `start_time + k / sample_rate`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    subject_id: String,
    sample_rate: f64,
    start_time: f64,
    samples: Vec<FeatureVector>,
}

impl Trial {
    pub fn new(
        subject_id: impl Into<String>,
        sample_rate: f64,
        start_time: f64,
        samples: Vec<FeatureVector>,
    ) -> Result<Trial, TrialError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(TrialError::BadSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(TrialError::Empty);
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(TrialError::NonFinite(i));
        }
        Ok(Trial {
            subject_id: subject_id.into(),
            sample_rate,
            start_time,
            samples,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn samples(&self) -> &[FeatureVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Timestamp of sample `k`, computed from the index (no accumulation).
    pub fn time(&self, k: usize) -> f64 {
        self.start_time + k as f64 / self.sample_rate
    }

    pub fn knee_angles(&self) -> Vec<f64> {
        self.samples.iter().map(FeatureVector::knee_angle).collect()
    }
}

/// One labeled row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabeledRow {
    pub time: f64,
    pub features: FeatureVector,
    pub phase: GaitPhase,
    /// Index into the dataset's `sources`.
    pub source: usize,
}

/// Rows of (features, phase) plus the ids of the trials they came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
    pub sources: Vec<String>,
}

impl LabeledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Append all rows of `other`, remapping its source ids.
    pub fn extend(&mut self, other: LabeledDataset) {
        let offset = self.sources.len();
        self.sources.extend(other.sources);
        self.rows.extend(other.rows.into_iter().map(|mut r| {
            r.source += offset;
            r
        }));
    }

    pub fn phase_counts(&self) -> [usize; N_PHASES] {
        let mut counts = [0; N_PHASES];
        for r in &self.rows {
            counts[r.phase.index()] += 1;
        }
        counts
    }

    /// First phase (canonical order) with no rows, if any.
    pub fn missing_phase(&self) -> Option<GaitPhase> {
        let counts = self.phase_counts();
        GaitPhase::ALL.into_iter().find(|p| counts[p.index()] == 0)
    }

    pub fn features(&self) -> Vec<FeatureVector> {
        self.rows.iter().map(|r| r.features).collect()
    }

    pub fn phases(&self) -> Vec<GaitPhase> {
        self.rows.iter().map(|r| r.phase).collect()
    }

    /// Subset by row index, keeping the source table.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            rows: indices.iter().map(|&i| self.rows[i]).collect(),
            sources: self.sources.clone(),
        }
    }
}
