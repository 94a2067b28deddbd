//! `GAITSVM v1` text model format.
//!
//! ```text
//! GAITSVM v1
//! features 5
//! kernel rbf gamma <g>
//! standardizer means <m0> .. <m4>
//! standardizer stds  <s0> .. <s4>
//! classifier <phaseA> <phaseB> nsv <k> bias <b>
//! sv <coef> <f0> .. <f4>          (k lines)
//! ...                             (21 classifier blocks, lexicographic pair order)
//! end
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::svm::ovo::{OvoModel, PairClassifier, N_PAIRS};
use crate::svm::standardize::Standardizer;
use crate::svm::{BinarySvmModel, KernelParams};
use crate::types::{FeatureVector, GaitPhase, N_FEATURES};

pub const FORMAT_HEADER: &str = "GAITSVM v1";

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("unsupported model format `{0}` (expected `{FORMAT_HEADER}`)")]
    FormatVersionMismatch(String),
    #[error("corrupt or missing `{0}` section")]
    CorruptSection(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_model<W: Write>(w: W, model: &OvoModel) -> io::Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{FORMAT_HEADER}")?;
    writeln!(w, "features {N_FEATURES}")?;
    writeln!(w, "kernel rbf gamma {}", real(model.kernel().gamma()))?;
    let s = model.standardizer();
    let join = |v: &[f64]| v.iter().map(|x| real(*x)).collect::<Vec<_>>().join(" ");
    writeln!(w, "standardizer means {}", join(s.means()))?;
    writeln!(w, "standardizer stds  {}", join(s.stds()))?;
    for c in model.classifiers() {
        let m = &c.model;
        writeln!(
            w,
            "classifier {} {} nsv {} bias {}",
            c.positive,
            c.negative,
            m.n_support(),
            real(m.bias)
        )?;
        for (sv, coef) in m.support_vectors.iter().zip(&m.dual_coefs) {
            writeln!(w, "sv {} {}", real(*coef), join(&sv.0))?;
        }
    }
    writeln!(w, "end")?;
    w.flush()
}

pub fn save_model(model: &OvoModel, path: &Path) -> io::Result<()> {
    write_model(File::create(path)?, model)
}

pub fn load_model(path: &Path) -> Result<OvoModel, ModelIoError> {
    read_model(File::open(path)?)
}

struct Lines<R: BufRead> {
    inner: io::Lines<R>,
}

impl<R: BufRead> Lines<R> {
    /// Next non-empty line split on whitespace, or `CorruptSection(section)`.
    fn next(&mut self, section: &str) -> Result<Vec<String>, ModelIoError> {
        loop {
            match self.inner.next() {
                None => return Err(corrupt(section)),
                Some(line) => {
                    let line = line?;
                    let fields: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                    if !fields.is_empty() {
                        return Ok(fields);
                    }
                }
            }
        }
    }
}

fn corrupt(section: &str) -> ModelIoError {
    ModelIoError::CorruptSection(section.to_string())
}

fn parse_real(s: &str, section: &str) -> Result<f64, ModelIoError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| corrupt(section))
}

fn parse_reals<const N: usize>(fields: &[String], section: &str) -> Result<[f64; N], ModelIoError> {
    if fields.len() != N {
        return Err(corrupt(section));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = parse_real(f, section)?;
    }
    Ok(out)
}

fn expect_prefix<'a>(
    fields: &'a [String],
    prefix: &[&str],
    section: &str,
) -> Result<&'a [String], ModelIoError> {
    if fields.len() < prefix.len() || fields.iter().zip(prefix).any(|(f, p)| f != p) {
        return Err(corrupt(section));
    }
    Ok(&fields[prefix.len()..])
}

pub fn read_model<R: Read>(r: R) -> Result<OvoModel, ModelIoError> {
    let mut reader = BufReader::new(r);
    let mut first = String::new();
    if reader.read_line(&mut first)? == 0 {
        return Err(corrupt("header"));
    }
    let header = first.trim();
    if header != FORMAT_HEADER {
        return Err(ModelIoError::FormatVersionMismatch(header.to_string()));
    }
    let mut lines = Lines {
        inner: reader.lines(),
    };

    let f = lines.next("features")?;
    let rest = expect_prefix(&f, &["features"], "features")?;
    if rest.len() != 1 || rest[0].parse::<usize>().ok() != Some(N_FEATURES) {
        return Err(corrupt("features"));
    }

    let f = lines.next("kernel")?;
    let [gamma] = parse_reals::<1>(expect_prefix(&f, &["kernel", "rbf", "gamma"], "kernel")?, "kernel")?;
    let kernel = KernelParams::rbf(gamma).map_err(|_| corrupt("kernel"))?;

    let f = lines.next("standardizer")?;
    let means = parse_reals::<N_FEATURES>(
        expect_prefix(&f, &["standardizer", "means"], "standardizer")?,
        "standardizer",
    )?;
    let f = lines.next("standardizer")?;
    let stds = parse_reals::<N_FEATURES>(
        expect_prefix(&f, &["standardizer", "stds"], "standardizer")?,
        "standardizer",
    )?;
    let standardizer = Standardizer::from_parts(means, stds).map_err(|_| corrupt("standardizer"))?;

    let mut classifiers = Vec::with_capacity(N_PAIRS);
    for _ in 0..N_PAIRS {
        let f = lines.next("classifier")?;
        if f.len() != 7 || f[0] != "classifier" || f[3] != "nsv" || f[5] != "bias" {
            return Err(corrupt("classifier"));
        }
        let positive: GaitPhase = f[1].parse().map_err(|_| corrupt("classifier"))?;
        let negative: GaitPhase = f[2].parse().map_err(|_| corrupt("classifier"))?;
        let nsv: usize = f[4].parse().map_err(|_| corrupt("classifier"))?;
        let bias = parse_real(&f[6], "classifier")?;
        let mut svs = Vec::with_capacity(nsv);
        let mut coefs = Vec::with_capacity(nsv);
        for _ in 0..nsv {
            let f = lines.next("sv")?;
            let vals = parse_reals::<{ N_FEATURES + 1 }>(expect_prefix(&f, &["sv"], "sv")?, "sv")?;
            coefs.push(vals[0]);
            svs.push(FeatureVector(std::array::from_fn(|j| vals[j + 1])));
        }
        let model = BinarySvmModel::new(svs, coefs, bias, kernel).map_err(|_| corrupt("classifier"))?;
        classifiers.push(PairClassifier {
            positive,
            negative,
            model,
        });
    }
    let f = lines.next("end")?;
    if f != ["end"] {
        return Err(corrupt("end"));
    }
    OvoModel::new(standardizer, classifiers).map_err(|_| corrupt("classifier"))
}
