//! C ABI for gaitsvm.
//!
//! Models are opaque `GaitsvmModel` handles released with
//! `gaitsvm_model_free`. Every fallible function returns a
//! `GaitsvmStatus`; on failure `gaitsvm_last_error` describes the problem
//! for the calling thread. Phases are passed as indices in canonical order
//! (0 = MidSwing ... 6 = InitialSwing), feature rows as 5 doubles
//! (acc_x, acc_y, acc_z, gyro_x, knee_angle).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use gaitsvm::eval::{class_rates, roc_binary, ConfusionMatrix};
use gaitsvm::labeling::{label_trial, PeakDetectorConfig, PhaseDistribution};
use gaitsvm::svm::{load_model, save_model, train_ovo, KernelParams, ModelIoError, OvoModel, TrainConfig};
use gaitsvm::{FeatureVector, GaitPhase, LabeledDataset, LabeledRow, Trial};

pub const GAITSVM_N_FEATURES: usize = 5;
pub const GAITSVM_N_PHASES: usize = 7;
/// Label written for samples outside the first-to-last peak span.
pub const GAITSVM_UNLABELED: i8 = -1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaitsvmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    FormatVersionMismatch = 4,
    CorruptModel = 5,
    Labeling = 6,
    Training = 7,
    NoConvergence = 8,
    Evaluation = 9,
    Panic = 10,
}

/// Opaque trained one-vs-one model.
pub struct GaitsvmModel {
    inner: OvoModel,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn fail(status: GaitsvmStatus, msg: impl Into<String>) -> GaitsvmStatus {
    set_error(msg);
    status
}

/// Run `f`, turning panics into `Panic` and clearing the error on success.
fn guard(f: impl FnOnce() -> Result<(), (GaitsvmStatus, String)>) -> GaitsvmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GaitsvmStatus::Ok
        }
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(GaitsvmStatus::Panic, "internal panic"),
    }
}

type FfiResult<T> = Result<T, (GaitsvmStatus, String)>;

fn null(name: &str) -> (GaitsvmStatus, String) {
    (GaitsvmStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(msg: impl Into<String>) -> (GaitsvmStatus, String) {
    (GaitsvmStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg(p: *const c_char, name: &str) -> FfiResult<PathBuf> {
    if p.is_null() {
        return Err(null(name));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn slice_mut_arg<'a, T>(p: *mut T, n: usize, name: &str) -> FfiResult<&'a mut [T]> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn model_arg<'a>(m: *const GaitsvmModel) -> FfiResult<&'a OvoModel> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

fn feature_rows(flat: &[f64]) -> Vec<FeatureVector> {
    flat.chunks_exact(GAITSVM_N_FEATURES)
        .map(|c| FeatureVector(std::array::from_fn(|j| c[j])))
        .collect()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next gaitsvm call on this thread.
#[no_mangle]
pub extern "C" fn gaitsvm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gaitsvm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static name of phase `index`, or null when `index >= GAITSVM_N_PHASES`.
#[no_mangle]
pub extern "C" fn gaitsvm_phase_name(index: u8) -> *const c_char {
    const NAMES: [&str; GAITSVM_N_PHASES] = [
        "MidSwing\0",
        "TerminalSwing\0",
        "LoadingResponse\0",
        "MidStance\0",
        "TerminalStance\0",
        "PreSwing\0",
        "InitialSwing\0",
    ];
    NAMES
        .get(index as usize)
        .map_or(ptr::null(), |s| s.as_ptr().cast())
}

/// Load a model file into `*out`.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_model_load(path: *const c_char, out: *mut *mut GaitsvmModel) -> GaitsvmStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = load_model(&path).map_err(|e| {
            let status = match e {
                ModelIoError::FormatVersionMismatch(_) => GaitsvmStatus::FormatVersionMismatch,
                ModelIoError::CorruptSection(_) => GaitsvmStatus::CorruptModel,
                ModelIoError::Io(_) => GaitsvmStatus::Io,
            };
            (status, format!("{}: {e}", path.display()))
        })?;
        *out = Box::into_raw(Box::new(GaitsvmModel { inner }));
        Ok(())
    })
}

/// Write `model` to `path`.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_model_save(model: *const GaitsvmModel, path: *const c_char) -> GaitsvmStatus {
    guard(|| {
        let m = model_arg(model)?;
        let path = path_arg(path, "path")?;
        save_model(m, &path).map_err(|e| (GaitsvmStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_model_free(model: *mut GaitsvmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Train on `n_rows` rows of `features` (row-major, 5 per row) with phase
/// indices `phases`. `gamma <= 0` selects the default 8/5. Fails with
/// `NoConvergence` unless `allow_nonconverged` is nonzero.
///
/// # Safety
/// `features` must hold `5 * n_rows` doubles, `phases` `n_rows` bytes and
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_model_train(
    features: *const f64,
    phases: *const u8,
    n_rows: usize,
    c: f64,
    gamma: f64,
    allow_nonconverged: i32,
    out: *mut *mut GaitsvmModel,
) -> GaitsvmStatus {
    guard(|| {
        let flat = slice_arg(features, n_rows * GAITSVM_N_FEATURES, "features")?;
        let labels = slice_arg(phases, n_rows, "phases")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut data = LabeledDataset {
            rows: Vec::with_capacity(n_rows),
            sources: vec!["ffi".to_string()],
        };
        for (i, (x, &p)) in feature_rows(flat).into_iter().zip(labels).enumerate() {
            let phase = GaitPhase::from_index(p as usize).map_err(|e| invalid(format!("row {i}: {e}")))?;
            if !x.is_finite() {
                return Err(invalid(format!("row {i}: non-finite feature")));
            }
            data.rows.push(LabeledRow {
                time: i as f64,
                features: x,
                phase,
                source: 0,
            });
        }
        let kernel = if gamma > 0.0 {
            KernelParams::rbf(gamma).map_err(|e| invalid(e.to_string()))?
        } else {
            KernelParams::fine_gaussian(GAITSVM_N_FEATURES)
        };
        let cfg = TrainConfig {
            c,
            ..TrainConfig::default()
        };
        cfg.validate().map_err(|e| invalid(e.to_string()))?;
        let fit = train_ovo(&data, &kernel, &cfg).map_err(|e| (GaitsvmStatus::Training, e.to_string()))?;
        let fit = if allow_nonconverged != 0 {
            fit
        } else {
            fit.require_converged()
                .map_err(|e| (GaitsvmStatus::NoConvergence, e.to_string()))?
        };
        *out = Box::into_raw(Box::new(GaitsvmModel { inner: fit.model }));
        Ok(())
    })
}

/// Predict `n_rows` rows. Writes one phase index per row to `out_phases`
/// and, when `out_scores` is not null, 7 per-class scores per row.
///
/// # Safety
/// `features` must hold `5 * n_rows` doubles, `out_phases` `n_rows` bytes
/// and `out_scores` (if not null) `7 * n_rows` doubles.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_model_predict(
    model: *const GaitsvmModel,
    features: *const f64,
    n_rows: usize,
    out_phases: *mut u8,
    out_scores: *mut f64,
) -> GaitsvmStatus {
    guard(|| {
        let m = model_arg(model)?;
        let flat = slice_arg(features, n_rows * GAITSVM_N_FEATURES, "features")?;
        let phases = slice_mut_arg(out_phases, n_rows, "out_phases")?;
        let mut scores = if out_scores.is_null() {
            None
        } else {
            Some(slice_mut_arg(out_scores, n_rows * GAITSVM_N_PHASES, "out_scores")?)
        };
        for (i, x) in feature_rows(flat).iter().enumerate() {
            let p = m.predict(x);
            phases[i] = p.phase.index() as u8;
            if let Some(s) = scores.as_deref_mut() {
                s[i * GAITSVM_N_PHASES..(i + 1) * GAITSVM_N_PHASES].copy_from_slice(&p.scores);
            }
        }
        Ok(())
    })
}

/// Label a knee-angle series sampled at `sample_rate` Hz with the default
/// peak detector and phase table. Writes a phase index per sample to
/// `out_labels` (`GAITSVM_UNLABELED` outside the first-to-last peak span)
/// and the number of detected peaks to `out_n_peaks` when not null.
///
/// # Safety
/// `knee` must hold `n` doubles and `out_labels` `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_label_knee(
    knee: *const f64,
    n: usize,
    sample_rate: f64,
    out_labels: *mut i8,
    out_n_peaks: *mut usize,
) -> GaitsvmStatus {
    guard(|| {
        let knee = slice_arg(knee, n, "knee")?;
        let labels = slice_mut_arg(out_labels, n, "out_labels")?;
        let samples = knee
            .iter()
            .map(|&k| FeatureVector::new(0.0, 0.0, 0.0, 0.0, k))
            .collect();
        let trial = Trial::new("ffi", sample_rate, 0.0, samples).map_err(|e| invalid(e.to_string()))?;
        let result = label_trial(
            &trial,
            &PeakDetectorConfig::for_sample_rate(sample_rate),
            &PhaseDistribution::default(),
        )
        .map_err(|e| (GaitsvmStatus::Labeling, e.to_string()))?;
        for (out, l) in labels.iter_mut().zip(&result.segmentation.labels) {
            *out = l.map_or(GAITSVM_UNLABELED, |p| p.index() as i8);
        }
        if !out_n_peaks.is_null() {
            *out_n_peaks = result.segmentation.peak_indices.len();
        }
        Ok(())
    })
}

/// Per-class PPV and TPR of a 7x7 confusion matrix (row-major, rows = true
/// phase). Undefined rates (empty column or row) are written as NaN.
///
/// # Safety
/// `counts` must hold 49 values; `out_ppv` and `out_tpr` 7 doubles each.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_confusion_rates(
    counts: *const u64,
    out_ppv: *mut f64,
    out_tpr: *mut f64,
) -> GaitsvmStatus {
    guard(|| {
        let flat = slice_arg(counts, GAITSVM_N_PHASES * GAITSVM_N_PHASES, "counts")?;
        let ppv = slice_mut_arg(out_ppv, GAITSVM_N_PHASES, "out_ppv")?;
        let tpr = slice_mut_arg(out_tpr, GAITSVM_N_PHASES, "out_tpr")?;
        let cm = ConfusionMatrix::from_counts(std::array::from_fn(|t| {
            std::array::from_fn(|p| flat[t * GAITSVM_N_PHASES + p])
        }));
        let rates = class_rates(&cm);
        for (k, r) in rates.rates.iter().enumerate() {
            ppv[k] = r.ppv.unwrap_or(f64::NAN);
            tpr[k] = r.tpr.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Area under the ROC curve of `scores` against `positive` (nonzero = positive).
///
/// # Safety
/// `positive` and `scores` must hold `n` values; `out_auc` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaitsvm_roc_auc(
    positive: *const u8,
    scores: *const f64,
    n: usize,
    out_auc: *mut f64,
) -> GaitsvmStatus {
    guard(|| {
        let pos: Vec<bool> = slice_arg(positive, n, "positive")?.iter().map(|&p| p != 0).collect();
        let s = slice_arg(scores, n, "scores")?;
        if out_auc.is_null() {
            return Err(null("out_auc"));
        }
        let curve = roc_binary(&pos, s).map_err(|e| (GaitsvmStatus::Evaluation, e.to_string()))?;
        *out_auc = curve.auc;
        Ok(())
    })
}
