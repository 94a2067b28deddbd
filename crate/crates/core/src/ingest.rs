//! CSV ingestion: per-sensor channel files, resampling onto a common
//! uniform grid, and the combined / labeled file schemas.
//!
//! Schemas (header row required, extra columns ignored on input):
//!
//! * A (IMU): `time,shank_acc_x,shank_acc_y,shank_acc_z,shank_gyro_x`
//! * B (knee): `time,knee_angle`
//! * C (combined): `time,shank_acc_x,shank_acc_y,shank_acc_z,shank_gyro_x,knee_angle`
//! * D (labeled): schema C plus a trailing `phase` column holding the phase name
//!
//! Reals are written with the shortest representation that parses back to
//! the identical `f64`.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::types::{
    FeatureVector, GaitPhase, LabeledDataset, LabeledRow, Trial, TrialError, N_FEATURES,
};

pub const TIME_COLUMN: &str = "time";
pub const PHASE_COLUMN: &str = "phase";
pub const IMU_COLUMNS: [&str; 4] = ["shank_acc_x", "shank_acc_y", "shank_acc_z", "shank_gyro_x"];
pub const KNEE_COLUMNS: [&str; 1] = ["knee_angle"];
pub const COMBINED_COLUMNS: [&str; N_FEATURES] = FeatureVector::NAMES;

/// Timestamps closer than this are treated as duplicates.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0}: malformed CSV: {1}")]
    Csv(String, String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` in column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: non-finite value in column `{column}`")]
    NonFinite { row: usize, column: String },
    #[error("row {0}: timestamps decrease")]
    NonMonotoneTimestamps(usize),
    #[error("row {0}: sample spacing is not uniform")]
    NonUniformSpacing(usize),
    #[error("row {row}: unknown phase `{value}`")]
    UnknownPhase { row: usize, value: String },
    #[error("channel files do not overlap by at least two output samples")]
    NoOverlap,
    #[error("no source sample within max_gap of t = {0}")]
    GapExceeded(f64),
    #[error("invalid alignment config: {0}")]
    BadConfig(String),
    #[error("cannot infer a sample rate from fewer than two rows")]
    UnknownRate,
    #[error(transparent)]
    Trial(#[from] TrialError),
}

/// A parsed channel file: the time column plus the requested value columns.
#[derive(Clone, Debug, PartialEq)]
pub struct RawChannelFile {
    pub path: PathBuf,
    /// Names of the retained value columns, in request order.
    pub columns: Vec<String>,
    pub times: Vec<f64>,
    /// One entry per row, aligned with `columns`.
    pub rows: Vec<Vec<f64>>,
}

impl RawChannelFile {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// File stem, used as the trial / subject id.
    pub fn stem(&self) -> String {
        stem_of(&self.path)
    }
}

pub(crate) fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Load a channel file, keeping `time` and the `required` columns.
pub fn load_channel(path: &Path, required: &[&str]) -> Result<RawChannelFile, IngestError> {
    let mut raw = parse_channel(open(path)?, &path.display().to_string(), required)?;
    raw.path = path.to_path_buf();
    Ok(raw)
}

/// Same as [`load_channel`] over any reader; `name` only labels errors.
pub fn parse_channel<R: Read>(
    reader: R,
    name: &str,
    required: &[&str],
) -> Result<RawChannelFile, IngestError> {
    let table = parse_table(reader, name, required, None)?;
    Ok(RawChannelFile {
        path: PathBuf::from(name),
        columns: required.iter().map(|s| s.to_string()).collect(),
        times: table.times,
        rows: table.values,
    })
}

struct Table {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

fn parse_table<R: Read>(
    reader: R,
    name: &str,
    required: &[&str],
    label_column: Option<&str>,
) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |e: csv::Error| IngestError::Csv(name.to_string(), e.to_string());
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let find = |col: &str| {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| IngestError::MissingColumn(col.to_string()))
    };
    let time_idx = find(TIME_COLUMN)?;
    let value_idx = required
        .iter()
        .map(|c| find(c))
        .collect::<Result<Vec<_>, _>>()?;
    let label_idx = label_column.map(find).transpose()?;

    let mut table = Table {
        times: Vec::new(),
        values: Vec::new(),
        labels: Vec::new(),
    };
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(csv_err)?;
        let field = |idx: usize, col: &str| -> Result<f64, IngestError> {
            let text = record.get(idx).unwrap_or("");
            let v: f64 = text.parse().map_err(|_| IngestError::Parse {
                row,
                column: col.to_string(),
                value: text.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IngestError::NonFinite {
                    row,
                    column: col.to_string(),
                });
            }
            Ok(v)
        };
        let t = field(time_idx, TIME_COLUMN)?;
        if let Some(&prev) = table.times.last() {
            if t < prev - TIME_EPS {
                return Err(IngestError::NonMonotoneTimestamps(row));
            }
        }
        let values = value_idx
            .iter()
            .zip(required)
            .map(|(&idx, col)| field(idx, col))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(idx) = label_idx {
            table
                .labels
                .push(record.get(idx).unwrap_or("").to_string());
        }
        table.times.push(t);
        table.values.push(values);
    }
    Ok(table)
}

/// Resampling parameters for [`align`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentConfig {
    pub target_rate: f64,
    /// Maximum distance (seconds) from an output timestamp to the nearest
    /// source sample of every channel.
    pub max_gap: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig {
            target_rate: 200.0,
            max_gap: 0.05,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.target_rate.is_finite() && self.target_rate > 0.0) {
            return Err(IngestError::BadConfig("target_rate must be > 0".into()));
        }
        if !(self.max_gap.is_finite() && self.max_gap > 0.0) {
            return Err(IngestError::BadConfig("max_gap must be > 0".into()));
        }
        Ok(())
    }
}

/// Drop timestamps within [`TIME_EPS`] of their predecessor (first wins).
fn dedup(times: &[f64], rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut t_out: Vec<f64> = Vec::with_capacity(times.len());
    let mut r_out = Vec::with_capacity(rows.len());
    for (t, r) in times.iter().zip(rows) {
        if t_out.last().is_some_and(|&p| (t - p).abs() <= TIME_EPS) {
            continue;
        }
        t_out.push(*t);
        r_out.push(r.clone());
    }
    (t_out, r_out)
}

/// Linear interpolation of a strictly increasing series at sorted query
/// points, enforcing the max-gap rule.
struct Interpolator<'a> {
    times: &'a [f64],
    rows: &'a [Vec<f64>],
    cursor: usize,
}

impl<'a> Interpolator<'a> {
    fn new(times: &'a [f64], rows: &'a [Vec<f64>]) -> Self {
        Interpolator {
            times,
            rows,
            cursor: 0,
        }
    }

    fn at(&mut self, t: f64, max_gap: f64, out: &mut [f64]) -> Result<(), IngestError> {
        let n = self.times.len();
        while self.cursor + 2 < n && self.times[self.cursor + 1] <= t {
            self.cursor += 1;
        }
        let i = self.cursor;
        if n == 1 || t <= self.times[i] {
            if (self.times[i] - t).abs() > max_gap {
                return Err(IngestError::GapExceeded(t));
            }
            out.copy_from_slice(&self.rows[i]);
            return Ok(());
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let nearest = (t - t0).min((t1 - t).abs());
        if nearest > max_gap {
            return Err(IngestError::GapExceeded(t));
        }
        if t >= t1 {
            out.copy_from_slice(&self.rows[i + 1]);
            return Ok(());
        }
        let w = (t - t0) / (t1 - t0);
        for (o, (a, b)) in out
            .iter_mut()
            .zip(self.rows[i].iter().zip(self.rows[i + 1].iter()))
        {
            *o = a + (b - a) * w;
        }
        Ok(())
    }
}

/// Resample an IMU file (schema A) and a knee file (schema B) onto a
/// uniform grid at `cfg.target_rate` over their common time window.
pub fn align(
    imu: &RawChannelFile,
    knee: &RawChannelFile,
    cfg: &AlignmentConfig,
) -> Result<Trial, IngestError> {
    cfg.validate()?;
    let imu_idx = IMU_COLUMNS
        .iter()
        .map(|c| {
            imu.columns
                .iter()
                .position(|x| x == c)
                .ok_or_else(|| IngestError::MissingColumn(c.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let knee_idx = knee
        .columns
        .iter()
        .position(|x| x == KNEE_COLUMNS[0])
        .ok_or_else(|| IngestError::MissingColumn(KNEE_COLUMNS[0].to_string()))?;
    if imu.is_empty() || knee.is_empty() {
        return Err(IngestError::NoOverlap);
    }

    let imu_rows: Vec<Vec<f64>> = imu
        .rows
        .iter()
        .map(|r| imu_idx.iter().map(|&j| r[j]).collect())
        .collect();
    let knee_rows: Vec<Vec<f64>> = knee.rows.iter().map(|r| vec![r[knee_idx]]).collect();
    let (imu_t, imu_v) = dedup(&imu.times, &imu_rows);
    let (knee_t, knee_v) = dedup(&knee.times, &knee_rows);

    let start = imu_t[0].max(knee_t[0]);
    let end = imu_t[imu_t.len() - 1].min(knee_t[knee_t.len() - 1]);
    let dt = 1.0 / cfg.target_rate;
    if end - start < 2.0 * dt - TIME_EPS {
        return Err(IngestError::NoOverlap);
    }
    let n = ((end - start) * cfg.target_rate + 1e-9).floor() as usize + 1;

    let mut imu_interp = Interpolator::new(&imu_t, &imu_v);
    let mut knee_interp = Interpolator::new(&knee_t, &knee_v);
    let mut samples = Vec::with_capacity(n);
    let mut imu_buf = [0.0; 4];
    let mut knee_buf = [0.0; 1];
    for k in 0..n {
        let t = (start + k as f64 / cfg.target_rate).min(end);
        imu_interp.at(t, cfg.max_gap, &mut imu_buf)?;
        knee_interp.at(t, cfg.max_gap, &mut knee_buf)?;
        samples.push(FeatureVector::new(
            imu_buf[0], imu_buf[1], imu_buf[2], imu_buf[3], knee_buf[0],
        ));
    }
    Ok(Trial::new(imu.stem(), cfg.target_rate, start, samples)?)
}

/// Rows of a combined (schema C) file without requiring uniform spacing.
pub fn load_combined_rows(path: &Path) -> Result<(Vec<f64>, Vec<FeatureVector>), IngestError> {
    parse_combined_rows(open(path)?, &path.display().to_string())
}

pub fn parse_combined_rows<R: Read>(
    reader: R,
    name: &str,
) -> Result<(Vec<f64>, Vec<FeatureVector>), IngestError> {
    let table = parse_table(reader, name, &COMBINED_COLUMNS, None)?;
    Ok((table.times, table.values.iter().map(|r| to_features(r)).collect()))
}

fn to_features(r: &[f64]) -> FeatureVector {
    FeatureVector([r[0], r[1], r[2], r[3], r[4]])
}

/// Load a combined (schema C) file as a trial. The sample rate is checked
/// against `sample_rate` when given, otherwise inferred from the time span.
pub fn load_combined(path: &Path, sample_rate: Option<f64>) -> Result<Trial, IngestError> {
    let (times, samples) = load_combined_rows(path)?;
    trial_from_rows(stem_of(path), &times, samples, sample_rate)
}

/// Build a trial from timestamped rows, verifying uniform spacing.
pub fn trial_from_rows(
    id: String,
    times: &[f64],
    samples: Vec<FeatureVector>,
    sample_rate: Option<f64>,
) -> Result<Trial, IngestError> {
    if samples.is_empty() {
        return Err(TrialError::Empty.into());
    }
    let n = times.len();
    let rate = match sample_rate {
        Some(r) => r,
        None if n >= 2 => (n - 1) as f64 / (times[n - 1] - times[0]),
        None => return Err(IngestError::UnknownRate),
    };
    if !(rate.is_finite() && rate > 0.0) {
        return Err(TrialError::BadSampleRate(rate).into());
    }
    let dt = 1.0 / rate;
    let tol = 1e-3 * dt;
    for (k, &t) in times.iter().enumerate() {
        if (t - (times[0] + k as f64 * dt)).abs() > tol {
            return Err(IngestError::NonUniformSpacing(k + 1));
        }
    }
    Ok(Trial::new(id, rate, times[0], samples)?)
}

/// Load a labeled (schema D) file. All rows get the file stem as source.
pub fn load_labeled(path: &Path) -> Result<LabeledDataset, IngestError> {
    parse_labeled(open(path)?, &stem_of(path))
}

pub fn parse_labeled<R: Read>(reader: R, source: &str) -> Result<LabeledDataset, IngestError> {
    let table = parse_table(reader, source, &COMBINED_COLUMNS, Some(PHASE_COLUMN))?;
    let rows = table
        .times
        .iter()
        .zip(&table.values)
        .zip(&table.labels)
        .enumerate()
        .map(|(i, ((&time, values), label))| {
            let phase = label
                .parse::<GaitPhase>()
                .map_err(|_| IngestError::UnknownPhase {
                    row: i + 1,
                    value: label.clone(),
                })?;
            Ok(LabeledRow {
                time,
                features: to_features(values),
                phase,
                source: 0,
            })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    Ok(LabeledDataset {
        rows,
        sources: vec![source.to_string()],
    })
}

fn combined_header() -> String {
    let mut h = String::from(TIME_COLUMN);
    for c in COMBINED_COLUMNS {
        h.push(',');
        h.push_str(c);
    }
    h
}

fn write_features<W: Write>(w: &mut W, time: f64, f: &FeatureVector) -> io::Result<()> {
    write!(w, "{}", fmt_real(time))?;
    for v in f.0 {
        write!(w, ",{}", fmt_real(v))?;
    }
    Ok(())
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v}")
}

/// Write a trial as schema C.
pub fn write_combined<W: Write>(w: W, trial: &Trial) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{}", combined_header())?;
    for (k, s) in trial.samples().iter().enumerate() {
        write_features(&mut w, trial.time(k), s)?;
        writeln!(w)?;
    }
    w.flush()
}

/// Write a labeled dataset as schema D.
pub fn write_labeled<W: Write>(w: W, data: &LabeledDataset) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{},{}", combined_header(), PHASE_COLUMN)?;
    for r in &data.rows {
        write_features(&mut w, r.time, &r.features)?;
        writeln!(w, ",{}", r.phase)?;
    }
    w.flush()
}
