//! Command-line front end. Every command writes a run manifest that can be
//! passed back through `--config` to repeat the run.

mod commands;

use std::collections::HashSet;
use std::ffi::OsString;
use std::io;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gaitsvm::eval::EvalError;
use gaitsvm::ingest::IngestError;
use gaitsvm::labeling::{LabelError, PhaseDistribution};
use gaitsvm::manifest::parse_config;
use gaitsvm::svm::{ModelIoError, SvmError};
use gaitsvm::GaitPhase;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LABELING: i32 = 3;
pub const EXIT_TRAINING: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;
pub const EXIT_EVALUATION: i32 = 6;
pub const EXIT_MODEL_IO: i32 = 7;

#[derive(Parser, Debug)]
#[command(name = "gaitsvm", version, about = "Gait-phase labeling, SVM training and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic trial (schema C) and its ground-truth phases.
    Synth(SynthArgs),
    /// Label trials into gait phases from knee-angle peaks (writes schema D).
    Label(LabelArgs),
    /// Train the one-vs-one SVM on labeled rows.
    Train(TrainArgs),
    /// Cross-validate on labeled rows and write report files.
    Evaluate(EvaluateArgs),
    /// Predict phases for a combined trial file.
    Predict(PredictArgs),
    /// One-vs-rest ROC from an evaluation scores file.
    Roc(RocArgs),
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a non-negative number, got `{s}`")),
    }
}

fn phase_dist(s: &str) -> Result<PhaseDistribution, String> {
    s.parse().map_err(|e: LabelError| e.to_string())
}

fn phase(s: &str) -> Result<GaitPhase, String> {
    s.parse().map_err(|e| format!("{e}"))
}

/// Phase table as a comma list or a file of `phase=percent` lines.
#[derive(Args, Debug, Clone)]
pub struct PhaseDistArgs {
    /// Seven percents in canonical order (MidSwing, TerminalSwing,
    /// LoadingResponse, MidStance, TerminalStance, PreSwing, InitialSwing).
    #[arg(long, value_parser = phase_dist, conflicts_with = "phase_dist_file")]
    pub phase_dist: Option<PhaseDistribution>,
    /// File of `phase=percent` lines.
    #[arg(long)]
    pub phase_dist_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub cycles: u64,
    /// Cycle length in seconds.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub period: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 200.0, value_parser = positive_f64)]
    pub rate: f64,
    #[arg(long, default_value_t = 60.0, value_parser = positive_f64)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 5.0)]
    pub baseline: f64,
    /// Knee bump width as a fraction of the cycle.
    #[arg(long, default_value_t = 0.6, value_parser = positive_f64)]
    pub crest_width: f64,
    /// Noise standard deviation on the four IMU channels.
    #[arg(long, default_value_t = gaitsvm::synth::DEFAULT_IMU_NOISE, value_parser = non_negative_f64)]
    pub noise: f64,
    /// Noise standard deviation on the knee channel.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64)]
    pub knee_noise: f64,
    #[command(flatten)]
    pub dist: PhaseDistArgs,
    #[arg(long, default_value = "synth")]
    pub subject: String,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    /// Manifest path (default `<out-dir>/<subject>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    /// Combined trial file (schema C). Repeatable.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// IMU file (schema A), paired in order with `--knee`. Repeatable.
    #[arg(long)]
    pub imu: Vec<PathBuf>,
    /// Knee-angle file (schema B). Repeatable.
    #[arg(long)]
    pub knee: Vec<PathBuf>,
    /// Resampling rate for IMU/knee pairs; expected rate of combined files
    /// (inferred when omitted).
    #[arg(long, value_parser = positive_f64)]
    pub rate: Option<f64>,
    /// Largest allowed distance (s) to a source sample when resampling.
    #[arg(long, default_value_t = 0.05, value_parser = positive_f64)]
    pub max_gap: f64,
    #[command(flatten)]
    pub dist: PhaseDistArgs,
    /// Peak threshold as a fraction of the knee-angle range.
    #[arg(long, default_value_t = 0.7, value_parser = positive_f64)]
    pub height_fraction: f64,
    /// Minimum peak spacing in samples (default half a second).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_distance: Option<u64>,
    /// Smallest knee-angle range accepted, in degrees.
    #[arg(long, default_value_t = 1.0, value_parser = non_negative_f64)]
    pub range_epsilon: f64,
    #[arg(long)]
    pub output: PathBuf,
    /// Manifest path (default `<output>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct SvmArgs {
    /// Box constraint.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub c: f64,
    /// RBF width `gamma` in `exp(-gamma |x - y|^2)` (default 8 / features).
    #[arg(long, value_parser = positive_f64)]
    pub gamma: Option<f64>,
    /// KKT violation tolerance.
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64)]
    pub kkt_tol: f64,
    /// Consecutive SMO passes without progress before giving up.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_passes: u64,
    /// Keep models whose solver stopped before reaching the tolerance.
    #[arg(long)]
    pub allow_nonconverged: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Labeled file (schema D). Repeatable.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Recorded in the manifest; training itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Manifest path (default `<output>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitArg {
    Stratified,
    Subject,
}

impl SplitArg {
    fn name(self) -> &'static str {
        match self {
            SplitArg::Stratified => "stratified",
            SplitArg::Subject => "subject",
        }
    }
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Labeled file (schema D). Repeatable; each file is one subject for
    /// `--split-by subject`.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    pub k: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SplitArg::Stratified)]
    pub split_by: SplitArg,
    #[command(flatten)]
    pub svm: SvmArgs,
    /// Also write the ROC curve for this phase. Repeatable.
    #[arg(long, value_parser = phase)]
    pub roc: Vec<GaitPhase>,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    /// Manifest path (default `<out-dir>/evaluate.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Combined trial file (schema C).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Manifest path (default `<output>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RocArgs {
    /// Scores file written by `evaluate`.
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, value_parser = phase)]
    pub phase: GaitPhase,
    #[arg(long, short = 'o')]
    pub out_dir: PathBuf,
    /// Manifest path (default `<out-dir>/roc_<phase>.manifest`).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("trial `{trial}`: {source}")]
    Label { trial: String, source: LabelError },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Train(#[from] SvmError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: ModelIoError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn svm_exit_code(e: &SvmError) -> i32 {
    match e {
        SvmError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        SvmError::Pair { source, .. } => svm_exit_code(source),
        _ => EXIT_TRAINING,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Label { .. } => EXIT_LABELING,
            CliError::Train(e) => svm_exit_code(e),
            CliError::Eval(EvalError::Fold { source, .. }) => svm_exit_code(source),
            CliError::Eval(_) => EXIT_EVALUATION,
            CliError::Model { .. } => EXIT_MODEL_IO,
            CliError::Ingest(_) | CliError::Io { .. } => EXIT_OTHER,
        }
    }
}

/// Expand `--config <file>` into flags placed before the explicit ones.
/// Config entries for flags that also appear explicitly are dropped, so
/// explicit flags always win and repeatable flags are not mixed.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.into_string().map_err(|a| CliError::Usage(format!("non-UTF-8 argument {a:?}"))))
        .collect::<Result<_, _>>()?;
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args.into_iter().map(OsString::from).collect());
    };
    let mut explicit = Vec::new();
    let mut config_path = None;
    let mut i = sub + 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" {
            let path = args
                .get(i + 1)
                .ok_or_else(|| CliError::Usage("--config needs a file".into()))?;
            config_path = Some(PathBuf::from(path));
            i += 2;
            continue;
        }
        if let Some(path) = a.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(path));
        } else {
            explicit.push(a.clone());
        }
        i += 1;
    }
    let mut out: Vec<String> = args[..=sub].to_vec();
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let entries = parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let given: HashSet<String> = explicit
            .iter()
            .filter_map(|a| {
                if a == "-o" {
                    Some("out-dir".to_string())
                } else {
                    a.strip_prefix("--").map(|f| f.split('=').next().unwrap_or(f).to_string())
                }
            })
            .collect();
        for (flag, value) in entries {
            if given.contains(&flag) {
                continue;
            }
            match value.as_str() {
                "true" => out.push(format!("--{flag}")),
                "false" => {}
                _ => {
                    out.push(format!("--{flag}"));
                    out.push(value);
                }
            }
        }
    }
    out.extend(explicit);
    Ok(out.into_iter().map(OsString::from).collect())
}

pub fn run(args: Vec<OsString>) -> i32 {
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Label(a) => commands::label(a),
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Predict(a) => commands::predict(a),
        Command::Roc(a) => commands::roc(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn explicit_flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.manifest");
        std::fs::write(
            &cfg,
            "command=train\nparam.c=2\nparam.input=a.csv\nparam.input=b.csv\nparam.allow-nonconverged=true\nparam.seed=3\n",
        )
        .unwrap();
        let merged = merge_config(os(&[
            "gaitsvm",
            "train",
            "--config",
            cfg.to_str().unwrap(),
            "--c=5",
            "--output",
            "m.txt",
        ]))
        .unwrap();
        let merged: Vec<String> = merged.into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(
            merged,
            [
                "gaitsvm",
                "train",
                "--input",
                "a.csv",
                "--input",
                "b.csv",
                "--allow-nonconverged",
                "--seed",
                "3",
                "--c=5",
                "--output",
                "m.txt"
            ]
        );
    }

    #[test]
    fn missing_config_is_usage_error() {
        let e = merge_config(os(&["gaitsvm", "train", "--config", "/nonexistent/x"])).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_USAGE);
    }
}
