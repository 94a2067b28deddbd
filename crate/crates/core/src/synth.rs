//! Deterministic synthetic gait trials with known crests and ground-truth
//! phases.
//!
//! Each cycle has `N = round(cycle_period * sample_rate)` samples. The knee
//! channel is `baseline + amplitude * bump`, where the bump is a raised
//! cosine of width `crest_width * N` centred on sample `N / 2` of the cycle
//! and zero elsewhere, so every cycle has exactly one strict maximum.
//! Ground truth splits the crest-to-crest intervals with the labeling
//! module's boundary arithmetic; virtual crests one cycle before the first
//! and after the last sample label the head and tail.
//!
//! The IMU channels hold the per-phase signature plus a gravity offset on
//! `acc_y`, plus Gaussian noise. Noise for channel `c` is the sequence of
//! normal draws from a ChaCha8 generator seeded with `seed` on stream `c`;
//! sample `k` takes the `k`-th draw.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::ingest::fmt_real;
use crate::labeling::{cycle_boundaries, PhaseDistribution};
use crate::types::{FeatureVector, GaitPhase, Trial, N_FEATURES, N_PHASES};

pub const GRAVITY: f64 = 9.81;
pub const DEFAULT_IMU_NOISE: f64 = 0.05;

/// Per-phase means of (acc_x, acc_y, acc_z, gyro_x). Closest pair is 1.5
/// apart, 30 default noise deviations.
pub const DEFAULT_SIGNATURES: [[f64; 4]; N_PHASES] = [
    [2.0, 0.0, -1.0, 3.0],
    [1.0, 1.5, 0.0, 1.5],
    [-1.0, 2.0, 1.0, -1.5],
    [0.0, 0.0, 0.0, 0.0],
    [1.0, -1.0, 1.5, -0.5],
    [-1.5, -2.0, -1.0, 0.5],
    [0.0, 1.0, -2.0, 2.0],
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    BadConfig(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_cycles: usize,
    /// Seconds per cycle.
    pub cycle_period: f64,
    /// Hz.
    pub sample_rate: f64,
    pub knee_amplitude: f64,
    pub knee_baseline: f64,
    /// Bump width as a fraction of the cycle, in (0, 1].
    pub crest_width: f64,
    /// Standard deviation per channel in feature order (the last entry is
    /// the knee angle).
    pub noise_std: [f64; N_FEATURES],
    pub phase_signatures: [[f64; 4]; N_PHASES],
    pub distribution: PhaseDistribution,
    pub seed: u64,
    pub subject_id: String,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = DEFAULT_IMU_NOISE;
        SynthConfig {
            n_cycles: 10,
            cycle_period: 1.0,
            sample_rate: 200.0,
            knee_amplitude: 60.0,
            knee_baseline: 5.0,
            crest_width: 0.6,
            noise_std: [s, s, s, s, 0.0],
            phase_signatures: DEFAULT_SIGNATURES,
            distribution: PhaseDistribution::default(),
            seed: 0,
            subject_id: "synth".to_string(),
        }
    }
}

impl SynthConfig {
    pub fn cycle_len(&self) -> usize {
        (self.cycle_period * self.sample_rate).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::BadConfig(m.to_string()));
        if self.n_cycles < 1 {
            return bad("n_cycles must be at least 1");
        }
        if !(self.cycle_period > 0.0 && self.cycle_period.is_finite()) {
            return bad("cycle_period must be positive");
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return bad("sample_rate must be positive");
        }
        if self.sample_rate * self.cycle_period < 2.0 * N_PHASES as f64 || self.cycle_len() < 2 * N_PHASES {
            return bad("sample_rate * cycle_period must be at least 14");
        }
        if !(self.knee_amplitude > 0.0 && self.knee_amplitude.is_finite()) || !self.knee_baseline.is_finite() {
            return bad("knee_amplitude must be positive and finite");
        }
        if !(self.crest_width > 0.0 && self.crest_width <= 1.0) || self.crest_width * (self.cycle_len() as f64) < 4.0 {
            return bad("crest_width must be in (0, 1] and span at least 4 samples");
        }
        if self.noise_std.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("noise_std must be non-negative");
        }
        if self.phase_signatures.iter().flatten().any(|v| !v.is_finite()) {
            return bad("phase signatures must be finite");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub trial: Trial,
    /// Ground-truth phase of every sample.
    pub truth: Vec<GaitPhase>,
    /// Index of every knee crest, one per cycle.
    pub crest_indices: Vec<usize>,
}

fn bump(offset: f64, half_width: f64) -> f64 {
    if offset.abs() >= half_width {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * offset / half_width).cos())
    }
}

/// Phase of every sample for cycles of `cycle_len` samples cresting at
/// `crest_offset` within each cycle.
pub fn ground_truth(
    n_samples: usize,
    cycle_len: usize,
    crest_offset: usize,
    dist: &PhaseDistribution,
) -> Vec<GaitPhase> {
    let mut truth = vec![GaitPhase::MidSwing; n_samples];
    let n = cycle_len as i64;
    let mut crest = crest_offset as i64 - n;
    while crest < n_samples as i64 {
        let bounds = cycle_boundaries(crest, crest + n, dist);
        for (k, phase) in GaitPhase::ALL.iter().enumerate() {
            let lo = bounds[k].clamp(0, n_samples as i64) as usize;
            let hi = bounds[k + 1].clamp(0, n_samples as i64) as usize;
            for t in &mut truth[lo..hi] {
                *t = *phase;
            }
        }
        crest += n;
    }
    truth
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;
    let n = cfg.cycle_len();
    let total = n * cfg.n_cycles;
    let crest_offset = n / 2;
    let half_width = cfg.crest_width * n as f64 / 2.0;
    let truth = ground_truth(total, n, crest_offset, &cfg.distribution);
    let crest_indices: Vec<usize> = (0..cfg.n_cycles).map(|c| c * n + crest_offset).collect();

    let mut noise = vec![vec![0.0; total]; N_FEATURES];
    for (ch, out) in noise.iter_mut().enumerate() {
        let std = cfg.noise_std[ch];
        if std == 0.0 {
            continue;
        }
        let normal = Normal::new(0.0, std).map_err(|e| SynthError::BadConfig(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(ch as u64);
        for v in out.iter_mut() {
            *v = normal.sample(&mut rng);
        }
    }

    let samples: Vec<FeatureVector> = (0..total)
        .map(|i| {
            let sig = cfg.phase_signatures[truth[i].index()];
            let offset = (i % n) as f64 - crest_offset as f64;
            let knee = cfg.knee_baseline + cfg.knee_amplitude * bump(offset, half_width);
            FeatureVector([
                sig[0] + noise[0][i],
                sig[1] + GRAVITY + noise[1][i],
                sig[2] + noise[2][i],
                sig[3] + noise[3][i],
                knee + noise[4][i],
            ])
        })
        .collect();
    let trial = Trial::new(cfg.subject_id.clone(), cfg.sample_rate, 0.0, samples)
        .map_err(|e| SynthError::BadConfig(e.to_string()))?;
    Ok(SynthOutput {
        trial,
        truth,
        crest_indices,
    })
}

/// Ground-truth sidecar: `time,phase` per sample.
pub fn write_ground_truth<W: Write>(mut w: W, trial: &Trial, truth: &[GaitPhase]) -> io::Result<()> {
    writeln!(w, "time,phase")?;
    for (k, p) in truth.iter().enumerate() {
        writeln!(w, "{},{}", fmt_real(trial.time(k)), p)?;
    }
    Ok(())
}
