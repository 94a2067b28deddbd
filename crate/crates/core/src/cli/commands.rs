use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gaitsvm::eval::{
    cross_validate_folds, make_folds, roc_one_vs_rest, roc_svg, write_confusion_csv, write_cv_summary,
    write_rates_csv, write_roc_csv, write_roc_meta, SplitBy,
};
use gaitsvm::ingest::{align, fmt_real, load_channel, load_combined, load_combined_rows, load_labeled, write_combined,
    write_labeled, AlignmentConfig, IMU_COLUMNS, KNEE_COLUMNS};
use gaitsvm::labeling::{label_trial, PeakDetectorConfig, PhaseDistribution};
use gaitsvm::manifest::RunManifest;
use gaitsvm::svm::{load_model, save_model, train_ovo, KernelParams, TrainConfig};
use gaitsvm::synth::{generate, write_ground_truth, SynthConfig};
use gaitsvm::{GaitPhase, LabeledDataset, Trial, N_FEATURES, N_PHASES};

use super::{
    CliError, EvaluateArgs, LabelArgs, PhaseDistArgs, PredictArgs, RocArgs, SplitArg, SvmArgs, SynthArgs,
    TrainArgs,
};

/// Status line on stdout; a closed pipe is not an error.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write a file through a buffered writer, mapping errors to the path.
fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err(path))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn finish_manifest(m: &mut RunManifest, path: Option<PathBuf>, default: PathBuf) -> Result<(), CliError> {
    // only an explicit path is replayed; a default follows the new outputs
    if let Some(p) = &path {
        m.param("manifest", p.display());
    }
    let path = path.unwrap_or(default);
    m.save(&path).map_err(io_err(&path))?;
    say!("manifest: {}", path.display());
    Ok(())
}

fn record_input(m: &mut RunManifest, path: &Path) -> Result<(), CliError> {
    m.input(path).map_err(io_err(path))?;
    Ok(())
}

fn record_output(m: &mut RunManifest, path: &Path) -> Result<(), CliError> {
    m.output(path).map_err(io_err(path))?;
    Ok(())
}

fn resolve_dist(args: &PhaseDistArgs, m: &mut RunManifest) -> Result<PhaseDistribution, CliError> {
    let dist = match (&args.phase_dist, &args.phase_dist_file) {
        (Some(d), _) => *d,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            record_input(m, path)?;
            PhaseDistribution::from_config_text(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => PhaseDistribution::default(),
    };
    m.param("phase-dist", dist);
    Ok(dist)
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("synth");
    m.seed = Some(a.seed);
    m.param("seed", a.seed)
        .param("cycles", a.cycles)
        .param("period", a.period)
        .param("rate", a.rate)
        .param("amplitude", a.amplitude)
        .param("baseline", a.baseline)
        .param("crest-width", a.crest_width)
        .param("noise", a.noise)
        .param("knee-noise", a.knee_noise);
    let distribution = resolve_dist(&a.dist, &mut m)?;
    m.param("subject", &a.subject).param("out-dir", a.out_dir.display());
    let n = a.noise;
    let cfg = SynthConfig {
        n_cycles: a.cycles as usize,
        cycle_period: a.period,
        sample_rate: a.rate,
        knee_amplitude: a.amplitude,
        knee_baseline: a.baseline,
        crest_width: a.crest_width,
        noise_std: [n, n, n, n, a.knee_noise],
        distribution,
        seed: a.seed,
        subject_id: a.subject.clone(),
        ..SynthConfig::default()
    };
    let out = generate(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    create_dir(&a.out_dir)?;
    let trial_path = a.out_dir.join(format!("{}.csv", a.subject));
    let truth_path = a.out_dir.join(format!("{}_truth.csv", a.subject));
    write_file(&trial_path, |w| write_combined(w, &out.trial))?;
    write_file(&truth_path, |w| write_ground_truth(w, &out.trial, &out.truth))?;
    record_output(&mut m, &trial_path)?;
    record_output(&mut m, &truth_path)?;
    say!(
        "synth: {} samples, {} cycles, crests at {:?}",
        out.trial.len(),
        a.cycles,
        out.crest_indices
    );
    say!("wrote {} and {}", trial_path.display(), truth_path.display());
    let default = a.out_dir.join(format!("{}.manifest", a.subject));
    finish_manifest(&mut m, a.manifest, default)
}

fn load_trials(a: &LabelArgs, m: &mut RunManifest) -> Result<Vec<Trial>, CliError> {
    if a.imu.len() != a.knee.len() {
        return Err(CliError::Usage(format!(
            "{} --imu files but {} --knee files",
            a.imu.len(),
            a.knee.len()
        )));
    }
    if a.input.is_empty() && a.imu.is_empty() {
        return Err(CliError::Usage("give --input or --imu/--knee files".into()));
    }
    let mut trials = Vec::new();
    for path in &a.input {
        m.param("input", path.display());
        record_input(m, path)?;
        trials.push(load_combined(path, a.rate)?);
    }
    let align_cfg = AlignmentConfig {
        target_rate: a.rate.unwrap_or(AlignmentConfig::default().target_rate),
        max_gap: a.max_gap,
    };
    for (imu, knee) in a.imu.iter().zip(&a.knee) {
        m.param("imu", imu.display()).param("knee", knee.display());
        record_input(m, imu)?;
        record_input(m, knee)?;
        let imu_file = load_channel(imu, &IMU_COLUMNS)?;
        let knee_file = load_channel(knee, &KNEE_COLUMNS)?;
        trials.push(align(&imu_file, &knee_file, &align_cfg)?);
    }
    Ok(trials)
}

pub fn label(a: LabelArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("label");
    let trials = load_trials(&a, &mut m)?;
    if let Some(r) = a.rate {
        m.param("rate", r);
    }
    m.param("max-gap", a.max_gap);
    let dist = resolve_dist(&a.dist, &mut m)?;
    m.param("height-fraction", a.height_fraction);
    if let Some(d) = a.min_distance {
        m.param("min-distance", d);
    }
    m.param("range-epsilon", a.range_epsilon)
        .param("output", a.output.display());

    let mut data = LabeledDataset::new();
    let mut totals = [0usize; N_PHASES];
    for trial in &trials {
        let mut cfg = PeakDetectorConfig::for_sample_rate(trial.sample_rate());
        cfg.height_fraction = a.height_fraction;
        cfg.range_epsilon = a.range_epsilon;
        if let Some(d) = a.min_distance {
            cfg.min_distance = d as usize;
        }
        let labels = label_trial(trial, &cfg, &dist).map_err(|source| CliError::Label {
            trial: trial.subject_id().to_string(),
            source,
        })?;
        let seg = &labels.segmentation;
        say!(
            "trial {}: {} peaks, {} cycles, {} rows",
            trial.subject_id(),
            seg.peak_indices.len(),
            seg.n_cycles(),
            labels.dataset.len()
        );
        for (t, c) in totals.iter_mut().zip(seg.phase_counts()) {
            *t += c;
        }
        data.extend(labels.dataset);
    }
    for p in GaitPhase::ALL {
        say!("  {:<16}{}", p.name(), totals[p.index()]);
    }
    write_file(&a.output, |w| write_labeled(w, &data))?;
    record_output(&mut m, &a.output)?;
    finish_manifest(&mut m, a.manifest, with_suffix(&a.output, ".manifest"))
}

fn load_dataset(inputs: &[PathBuf], m: &mut RunManifest) -> Result<LabeledDataset, CliError> {
    let mut data = LabeledDataset::new();
    for path in inputs {
        m.param("input", path.display());
        record_input(m, path)?;
        data.extend(load_labeled(path)?);
    }
    Ok(data)
}

fn resolve_svm(a: &SvmArgs, m: &mut RunManifest) -> Result<(KernelParams, TrainConfig), CliError> {
    let kernel = match a.gamma {
        Some(g) => KernelParams::rbf(g)?,
        None => KernelParams::fine_gaussian(N_FEATURES),
    };
    let cfg = TrainConfig {
        c: a.c,
        kkt_tol: a.kkt_tol,
        max_passes: a.max_passes as usize,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    m.param("c", a.c)
        .param("gamma", kernel.gamma())
        .param("kkt-tol", a.kkt_tol)
        .param("max-passes", a.max_passes)
        .param("allow-nonconverged", a.allow_nonconverged);
    Ok((kernel, cfg))
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("train");
    let data = load_dataset(&a.input, &mut m)?;
    let (kernel, mut cfg) = resolve_svm(&a.svm, &mut m)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
        m.seed = Some(seed);
        m.param("seed", seed);
    }
    m.param("output", a.output.display());
    let fit = train_ovo(&data, &kernel, &cfg)?;
    say!("rows {}, gamma {}, C {}", data.len(), fmt_real(kernel.gamma()), fmt_real(cfg.c));
    for r in &fit.reports {
        say!(
            "pair {:<15} {:<15} rows {:>6}  sv {:>6}  converged {}  gap {:.3e}",
            r.positive.name(),
            r.negative.name(),
            r.n_rows,
            r.n_support,
            r.converged,
            r.kkt_gap
        );
    }
    let fit = if a.svm.allow_nonconverged {
        fit
    } else {
        fit.require_converged()?
    };
    save_model(&fit.model, &a.output).map_err(io_err(&a.output))?;
    record_output(&mut m, &a.output)?;
    say!("model: {}", a.output.display());
    finish_manifest(&mut m, a.manifest, with_suffix(&a.output, ".manifest"))
}

fn write_scores_csv<W: Write>(
    mut w: W,
    data: &LabeledDataset,
    report: &gaitsvm::eval::CvReport,
) -> io::Result<()> {
    let names: Vec<String> = GaitPhase::ALL.iter().map(|p| format!("score_{p}")).collect();
    writeln!(w, "time,source,truth,predicted,fold,{}", names.join(","))?;
    for (i, r) in data.rows.iter().enumerate() {
        let scores: Vec<String> = report.scores[i].iter().map(|s| fmt_real(*s)).collect();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_real(r.time),
            data.sources.get(r.source).map_or("", String::as_str),
            r.phase,
            report.predictions[i],
            report.fold_of_row[i],
            scores.join(",")
        )?;
    }
    Ok(())
}

fn write_roc_files(
    out_dir: &Path,
    target: GaitPhase,
    curve: &gaitsvm::eval::RocCurve,
    m: &mut RunManifest,
) -> Result<(), CliError> {
    let csv = out_dir.join(format!("roc_{target}.csv"));
    let meta = out_dir.join(format!("roc_{target}.meta"));
    let svg = out_dir.join(format!("roc_{target}.svg"));
    write_file(&csv, |w| write_roc_csv(w, curve))?;
    write_file(&meta, |w| write_roc_meta(w, target, curve))?;
    write_file(&svg, |w| w.write_all(roc_svg(target, curve).as_bytes()))?;
    for p in [&csv, &meta, &svg] {
        record_output(m, p)?;
    }
    say!("roc {target}: auc {:.4} ({})", curve.auc, csv.display());
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("evaluate");
    let data = load_dataset(&a.input, &mut m)?;
    m.seed = Some(a.seed);
    m.param("k", a.k)
        .param("seed", a.seed)
        .param("split-by", a.split_by.name());
    let (kernel, cfg) = resolve_svm(&a.svm, &mut m)?;
    for p in &a.roc {
        m.param("roc", p);
    }
    m.param("out-dir", a.out_dir.display());

    let split = match a.split_by {
        SplitArg::Stratified => SplitBy::Stratified,
        SplitArg::Subject => SplitBy::Subject,
    };
    let folds = make_folds(&data, a.k as usize, a.seed, split)?;
    let report = cross_validate_folds(&data, &kernel, &cfg, &folds)?;
    if !a.svm.allow_nonconverged {
        for (f, reports) in report.pair_reports.iter().enumerate() {
            if let Some(r) = reports.iter().find(|r| !r.converged) {
                return Err(gaitsvm::eval::EvalError::Fold {
                    fold: f,
                    source: gaitsvm::svm::SvmError::Pair {
                        a: r.positive,
                        b: r.negative,
                        source: Box::new(gaitsvm::svm::SvmError::NoConvergence {
                            kkt_gap: r.kkt_gap,
                            iterations: r.iterations,
                        }),
                    },
                }
                .into());
            }
        }
    }

    create_dir(&a.out_dir)?;
    let confusion = a.out_dir.join("confusion.csv");
    let rates = a.out_dir.join("rates.csv");
    let summary = a.out_dir.join("summary.txt");
    let scores = a.out_dir.join("scores.csv");
    write_file(&confusion, |w| write_confusion_csv(w, &report.confusion))?;
    write_file(&rates, |w| write_rates_csv(w, &report.rates))?;
    write_file(&summary, |w| write_cv_summary(w, &report))?;
    write_file(&scores, |w| write_scores_csv(w, &data, &report))?;
    for p in [&confusion, &rates, &summary, &scores] {
        record_output(&mut m, p)?;
    }
    for (f, acc) in report.fold_accuracies.iter().enumerate() {
        say!("fold {f}: accuracy {acc:.4}");
    }
    say!(
        "pooled accuracy {:.4} ({}/{})",
        report.accuracy,
        report.confusion.trace(),
        report.confusion.total()
    );
    let truths = data.phases();
    for &target in &a.roc {
        let curve = roc_one_vs_rest(&truths, &report.scores, target)?;
        write_roc_files(&a.out_dir, target, &curve, &mut m)?;
    }
    finish_manifest(&mut m, a.manifest, a.out_dir.join("evaluate.manifest"))
}

pub fn predict(a: PredictArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("predict");
    m.param("model", a.model.display())
        .param("input", a.input.display())
        .param("output", a.output.display());
    record_input(&mut m, &a.model)?;
    record_input(&mut m, &a.input)?;
    let model = load_model(&a.model).map_err(|source| CliError::Model {
        path: a.model.clone(),
        source,
    })?;
    let (times, samples) = load_combined_rows(&a.input)?;
    write_file(&a.output, |w| {
        let names: Vec<String> = GaitPhase::ALL.iter().map(|p| format!("score_{p}")).collect();
        writeln!(w, "time,phase,{}", names.join(","))?;
        for (t, x) in times.iter().zip(&samples) {
            let p = model.predict(x);
            let scores: Vec<String> = p.scores.iter().map(|s| fmt_real(*s)).collect();
            writeln!(w, "{},{},{}", fmt_real(*t), p.phase, scores.join(","))?;
        }
        Ok(())
    })?;
    record_output(&mut m, &a.output)?;
    say!("predicted {} rows into {}", samples.len(), a.output.display());
    finish_manifest(&mut m, a.manifest, with_suffix(&a.output, ".manifest"))
}

fn read_scores(path: &Path, target: GaitPhase) -> Result<(Vec<GaitPhase>, Vec<[f64; N_PHASES]>), CliError> {
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let truth_col = col("truth")?;
    let score_col = col(&format!("score_{target}"))?;
    let mut truths = Vec::new();
    let mut scores = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let truth: GaitPhase = field(truth_col)
            .parse()
            .map_err(|_| bad(format!("row {}: bad phase `{}`", i + 1, field(truth_col))))?;
        let s: f64 = field(score_col)
            .parse()
            .map_err(|_| bad(format!("row {}: bad score `{}`", i + 1, field(score_col))))?;
        let mut row = [0.0; N_PHASES];
        row[target.index()] = s;
        truths.push(truth);
        scores.push(row);
    }
    Ok((truths, scores))
}

pub fn roc(a: RocArgs) -> Result<(), CliError> {
    let mut m = RunManifest::new("roc");
    m.param("scores", a.scores.display())
        .param("phase", a.phase)
        .param("out-dir", a.out_dir.display());
    record_input(&mut m, &a.scores)?;
    let (truths, scores) = read_scores(&a.scores, a.phase)?;
    let curve = roc_one_vs_rest(&truths, &scores, a.phase)?;
    create_dir(&a.out_dir)?;
    write_roc_files(&a.out_dir, a.phase, &curve, &mut m)?;
    let default = a.out_dir.join(format!("roc_{}.manifest", a.phase));
    finish_manifest(&mut m, a.manifest, default)
}
