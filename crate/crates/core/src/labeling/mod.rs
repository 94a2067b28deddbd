//! Gait-phase labeling from knee-angle peaks.
//!
//! Each trial gets a threshold derived from its own knee-angle range. Peaks
//! above it delimit gait cycles, and each peak-to-peak interval is split
//! into the seven phases according to a [`PhaseDistribution`]. Samples
//! before the first peak and from the last peak onward cannot be assigned a
//! cycle and are left unlabeled.

mod peaks;

pub use peaks::detect_peaks;

use std::fmt;
use std::str::FromStr;

use crate::types::{GaitPhase, LabeledDataset, LabeledRow, Trial, N_PHASES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LabelError {
    #[error("knee-angle range {range:.3} deg is below {epsilon} deg")]
    DegenerateSignal { range: f64, epsilon: f64 },
    #[error("found {0} peak(s), need at least 2")]
    TooFewPeaks(usize),
    #[error("cycle [{start}, {end}) is shorter than {N_PHASES} samples")]
    EmptyCycle { start: usize, end: usize },
    #[error("peak indices must be strictly increasing and inside the signal")]
    InvalidPeaks,
    #[error("invalid peak detector config: {0}")]
    BadConfig(String),
    #[error("invalid phase distribution: {0}")]
    BadDistribution(String),
}

/// Peak detection settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeakDetectorConfig {
    /// Threshold height as a fraction of the knee-angle range above its
    /// minimum, in (0, 1].
    pub height_fraction: f64,
    /// Minimum spacing of kept peaks, in samples.
    pub min_distance: usize,
    /// Knee-angle ranges below this (degrees) are rejected.
    pub range_epsilon: f64,
}

impl PeakDetectorConfig {
    pub const DEFAULT_HEIGHT_FRACTION: f64 = 0.7;
    pub const DEFAULT_MIN_SPACING_SECS: f64 = 0.5;
    pub const DEFAULT_RANGE_EPSILON: f64 = 1.0;

    /// Defaults with `min_distance` set to half a second at `sample_rate`.
    pub fn for_sample_rate(sample_rate: f64) -> Self {
        PeakDetectorConfig {
            height_fraction: Self::DEFAULT_HEIGHT_FRACTION,
            min_distance: ((Self::DEFAULT_MIN_SPACING_SECS * sample_rate).round() as usize).max(1),
            range_epsilon: Self::DEFAULT_RANGE_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<(), LabelError> {
        if !(self.height_fraction > 0.0 && self.height_fraction <= 1.0) {
            return Err(LabelError::BadConfig(format!(
                "height_fraction must be in (0, 1], got {}",
                self.height_fraction
            )));
        }
        if self.min_distance < 1 {
            return Err(LabelError::BadConfig("min_distance must be >= 1".into()));
        }
        if self.range_epsilon.is_nan() || self.range_epsilon < 0.0 {
            return Err(LabelError::BadConfig("range_epsilon must be >= 0".into()));
        }
        Ok(())
    }
}

/// Relative duration of each phase within a peak-to-peak cycle, in
/// canonical order starting at `MidSwing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseDistribution {
    percents: [f64; N_PHASES],
}

impl Default for PhaseDistribution {
    /// Standard heel-strike phase table rotated to start at peak knee
    /// flexion (about 73% of the heel-strike cycle).
    fn default() -> Self {
        PhaseDistribution {
            percents: [14.0, 13.0, 10.0, 20.0, 20.0, 10.0, 13.0],
        }
    }
}

impl PhaseDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(percents: [f64; N_PHASES]) -> Result<Self, LabelError> {
        if let Some((i, p)) = percents
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return Err(LabelError::BadDistribution(format!(
                "{} percent must be positive, got {p}",
                GaitPhase::ALL[i]
            )));
        }
        let sum: f64 = percents.iter().sum();
        if (sum - 100.0).abs() > Self::SUM_TOLERANCE {
            return Err(LabelError::BadDistribution(format!(
                "percents sum to {sum}, expected 100"
            )));
        }
        Ok(PhaseDistribution { percents })
    }

    /// Equal share for every phase.
    pub fn uniform() -> Self {
        PhaseDistribution {
            percents: [100.0 / N_PHASES as f64; N_PHASES],
        }
    }

    pub fn percents(&self) -> &[f64; N_PHASES] {
        &self.percents
    }

    pub fn percent(&self, phase: GaitPhase) -> f64 {
        self.percents[phase.index()]
    }

    /// Parse `phase=percent` lines (blank lines and `#` comments allowed).
    /// Every phase must appear exactly once.
    pub fn from_config_text(text: &str) -> Result<Self, LabelError> {
        let mut percents = [f64::NAN; N_PHASES];
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| LabelError::BadDistribution(format!("expected phase=percent: `{line}`")))?;
            let phase: GaitPhase = name
                .trim()
                .parse()
                .map_err(|e| LabelError::BadDistribution(format!("{e}")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| LabelError::BadDistribution(format!("bad percent `{}`", value.trim())))?;
            if !percents[phase.index()].is_nan() {
                return Err(LabelError::BadDistribution(format!("{phase} given twice")));
            }
            percents[phase.index()] = value;
        }
        if let Some(i) = percents.iter().position(|p| p.is_nan()) {
            return Err(LabelError::BadDistribution(format!(
                "{} missing",
                GaitPhase::ALL[i]
            )));
        }
        Self::new(percents)
    }

    /// `phase=percent` lines in canonical order.
    pub fn to_config_text(&self) -> String {
        GaitPhase::ALL
            .iter()
            .map(|p| format!("{p}={}\n", self.percent(*p)))
            .collect()
    }
}

/// Seven comma-separated percents in canonical order, e.g.
/// `14,13,10,20,20,10,13`.
impl FromStr for PhaseDistribution {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| LabelError::BadDistribution(format!("bad percent `{}`", v.trim())))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let percents: [f64; N_PHASES] = values.try_into().map_err(|v: Vec<f64>| {
            LabelError::BadDistribution(format!("expected {N_PHASES} values, got {}", v.len()))
        })?;
        Self::new(percents)
    }
}

impl fmt::Display for PhaseDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.percents.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Phase boundaries of the cycle `[start, end)`.
///
/// Entry `k` is the first sample of phase `k`; entry 7 is `end`. Inner
/// boundaries round half up on the cumulative percentage measured from the
/// cycle start, so every cycle is computed independently of the others.
/// Works on signed indices so callers may place virtual cycles before the
/// first sample.
pub fn cycle_boundaries(start: i64, end: i64, dist: &PhaseDistribution) -> [i64; N_PHASES + 1] {
    let len = (end - start) as f64;
    let mut bounds = [start; N_PHASES + 1];
    let mut cumulative = 0.0;
    for k in 1..N_PHASES {
        cumulative += dist.percents[k - 1];
        let b = (start as f64 + len * cumulative / 100.0 + 0.5).floor() as i64;
        bounds[k] = b.clamp(bounds[k - 1], end);
    }
    bounds[N_PHASES] = end;
    bounds
}

/// Per-sample phase assignment between the first and last peak.
#[derive(Clone, Debug, PartialEq)]
pub struct CycleSegmentation {
    pub peak_indices: Vec<usize>,
    /// One entry per input sample; `None` outside `[first_peak, last_peak)`.
    pub labels: Vec<Option<GaitPhase>>,
}

impl CycleSegmentation {
    pub fn first_peak(&self) -> usize {
        self.peak_indices[0]
    }

    pub fn last_peak(&self) -> usize {
        self.peak_indices[self.peak_indices.len() - 1]
    }

    pub fn n_cycles(&self) -> usize {
        self.peak_indices.len() - 1
    }

    pub fn phase_counts(&self) -> [usize; N_PHASES] {
        let mut counts = [0; N_PHASES];
        for p in self.labels.iter().flatten() {
            counts[p.index()] += 1;
        }
        counts
    }
}

/// `min + height_fraction * (max - min)` of the trial's knee angle.
pub fn subject_threshold(trial: &Trial, cfg: &PeakDetectorConfig) -> Result<f64, LabelError> {
    cfg.validate()?;
    knee_threshold(&trial.knee_angles(), cfg)
}

pub(crate) fn knee_threshold(knee: &[f64], cfg: &PeakDetectorConfig) -> Result<f64, LabelError> {
    let (lo, hi) = knee
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if range.is_nan() || range < cfg.range_epsilon {
        return Err(LabelError::DegenerateSignal {
            range: if range.is_finite() { range } else { 0.0 },
            epsilon: cfg.range_epsilon,
        });
    }
    Ok(lo + cfg.height_fraction * range)
}

/// Split every peak-to-peak interval into the seven phases.
pub fn segment_cycles(
    peak_indices: &[usize],
    dist: &PhaseDistribution,
    n_samples: usize,
) -> Result<CycleSegmentation, LabelError> {
    if peak_indices.len() < 2 {
        return Err(LabelError::TooFewPeaks(peak_indices.len()));
    }
    if peak_indices.windows(2).any(|w| w[0] >= w[1])
        || peak_indices[peak_indices.len() - 1] >= n_samples
    {
        return Err(LabelError::InvalidPeaks);
    }
    let mut labels = vec![None; n_samples];
    for w in peak_indices.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q - p < N_PHASES {
            return Err(LabelError::EmptyCycle { start: p, end: q });
        }
        let bounds = cycle_boundaries(p as i64, q as i64, dist);
        for (k, phase) in GaitPhase::ALL.iter().enumerate() {
            for label in &mut labels[bounds[k] as usize..bounds[k + 1] as usize] {
                *label = Some(*phase);
            }
        }
    }
    Ok(CycleSegmentation {
        peak_indices: peak_indices.to_vec(),
        labels,
    })
}

/// Labeling result for one trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialLabels {
    pub threshold: f64,
    pub segmentation: CycleSegmentation,
    pub dataset: LabeledDataset,
}

/// Threshold, detect peaks and segment one trial. Only samples inside
/// `[first_peak, last_peak)` become rows.
pub fn label_trial(
    trial: &Trial,
    cfg: &PeakDetectorConfig,
    dist: &PhaseDistribution,
) -> Result<TrialLabels, LabelError> {
    let threshold = subject_threshold(trial, cfg)?;
    let knee = trial.knee_angles();
    let peaks = detect_peaks(&knee, threshold, cfg.min_distance);
    let segmentation = segment_cycles(&peaks, dist, trial.len())?;
    let rows = segmentation
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, label)| {
            label.map(|phase| LabeledRow {
                time: trial.time(i),
                features: trial.samples()[i],
                phase,
                source: 0,
            })
        })
        .collect();
    Ok(TrialLabels {
        threshold,
        segmentation,
        dataset: LabeledDataset {
            rows,
            sources: vec![trial.subject_id().to_string()],
        },
    })
}
