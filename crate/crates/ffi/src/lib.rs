//! C ABI for the jscc noisy-channel autoencoder library.
//!
//! Conventions, mirrored in the generated `include/jscc.h`:
//!
//! - Every fallible call returns a [`JsccStatus`]; `JsccStatus::Ok` is zero.
//!   On failure a human-readable message is stored per thread and stays
//!   valid until the next library call on that thread; read it with
//!   [`jscc_last_error_message`].
//! - Datasets, models, and run reports are opaque handles created and
//!   destroyed by this library. Passing a handle after freeing it, or a
//!   pointer that did not come from the matching constructor, is undefined
//!   behavior. Freeing a null handle is a no-op.
//! - Output buffers are caller-owned; each call documents the capacity it
//!   needs and fails with `BufferTooSmall` without writing otherwise.
//! - Strings returned as `const char*` are NUL-terminated and owned by the
//!   library (either static or tied to the handle they came from); callers
//!   must not free them.
//! - Panics never unwind across the boundary; they are reported as
//!   `JsccStatus::Panic`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use jscc_core::channel::{transmit, ChannelSpec};
use jscc_core::data::{load_idx, synth_dataset, SynthKind};
use jscc_core::harness::run_experiment;
use jscc_core::model::{sample_code, Model};
use jscc_core::trainer::evaluate;
use jscc_core::{config::RunConfig, Dataset, Error, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code returned by every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsccStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// An argument value was rejected (bad shape, range, or combination).
    InvalidArgument = 3,
    /// A configuration file or override could not be parsed.
    Config = 4,
    /// A data file was malformed.
    Data = 5,
    /// A checkpoint file was malformed or incompatible.
    Checkpoint = 6,
    /// Arithmetic produced non-finite values or training diverged.
    Numeric = 7,
    /// An operating-system I/O error occurred.
    Io = 8,
    /// An output buffer was too small; nothing was written.
    BufferTooSmall = 9,
    /// One or more self-test checks failed.
    SelftestFailed = 10,
    /// An internal panic was caught at the boundary.
    Panic = 11,
}

/// Synthetic dataset families accepted by [`jscc_dataset_synth`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsccSynthKind {
    /// Distinct one-hot vectors, cycled to fill the requested count.
    OneHot = 0,
    /// Independent fair coin flips per pixel.
    RandomBinary = 1,
    /// One soft Gaussian bump per image; requires a square pixel count.
    Blob = 2,
}

/// Opaque dataset handle.
pub struct JsccDataset {
    inner: Dataset,
}

/// Opaque model handle.
pub struct JsccModel {
    inner: Model,
}

/// Opaque training-run report handle.
pub struct JsccRunReport {
    dir: CString,
    config_path: CString,
    metrics_path: CString,
    best_checkpoint: CString,
    final_checkpoint: CString,
    summary_path: CString,
    test_mse: f64,
    epochs_run: usize,
    best_epoch: usize,
    best_valid_mse: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn fail(status: JsccStatus, message: &str) -> JsccStatus {
    set_last_error(message);
    status
}

fn ok() -> JsccStatus {
    set_last_error("");
    JsccStatus::Ok
}

fn status_for(err: &Error) -> JsccStatus {
    match err {
        Error::Shape { .. }
        | Error::NonScalarOutput { .. }
        | Error::InvalidEpsilon(_)
        | Error::InvalidArgument { .. } => JsccStatus::InvalidArgument,
        Error::NonFinite { .. } | Error::ImpossibleTransition { .. } | Error::Diverged { .. } => {
            JsccStatus::Numeric
        }
        Error::Config { .. } => JsccStatus::Config,
        Error::DataFormat { .. } => JsccStatus::Data,
        Error::Checkpoint { .. } => JsccStatus::Checkpoint,
        Error::Io { .. } => JsccStatus::Io,
    }
}

fn lib_err(err: Error) -> JsccStatus {
    fail(status_for(&err), &err.to_string())
}

/// Runs `f`, converting any panic into `JsccStatus::Panic` instead of
/// unwinding into the caller.
fn guarded(f: impl FnOnce() -> JsccStatus) -> JsccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            fail(JsccStatus::Panic, &format!("internal panic: {detail}"))
        }
    }
}

/// Converts a caller string to UTF-8, reporting null and encoding errors.
///
/// # Safety
///
/// `ptr`, when non-null, must point to a NUL-terminated string.
unsafe fn utf8_arg(ptr: *const c_char, name: &str) -> Result<String, JsccStatus> {
    if ptr.is_null() {
        return Err(fail(JsccStatus::NullPointer, &format!("{name} is null")));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => Err(fail(
            JsccStatus::Utf8,
            &format!("{name} is not valid UTF-8"),
        )),
    }
}

fn empty_cstr() -> *const c_char {
    static EMPTY: [c_char; 1] = [0];
    EMPTY.as_ptr()
}

fn cstring_from_path(path: &std::path::Path) -> CString {
    CString::new(path.to_string_lossy().replace('\0', " ")).unwrap_or_default()
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn jscc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Returns the message for the most recent failure on this thread, or an
/// empty string after a success. The pointer stays valid until the next
/// library call on the same thread.
#[no_mangle]
pub extern "C" fn jscc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Generates a deterministic synthetic dataset of `n` examples with `d`
/// pixels each and stores a new handle in `*out`.
///
/// # Safety
///
/// `out` must be a valid pointer to a `JsccDataset*` slot.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_synth(
    kind: JsccSynthKind,
    n: usize,
    d: usize,
    seed: u64,
    out: *mut *mut JsccDataset,
) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        let kind = match kind {
            JsccSynthKind::OneHot => SynthKind::OneHot,
            JsccSynthKind::RandomBinary => SynthKind::RandomBinary,
            JsccSynthKind::Blob => SynthKind::Blob,
        };
        match synth_dataset(kind, n, d, seed) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(JsccDataset { inner: ds }));
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Loads an IDX image file (8-bit pixels, scaled to [0, 1]) and stores a
/// new handle in `*out`.
///
/// # Safety
///
/// `images` must be a NUL-terminated path and `out` a valid slot pointer.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_load_idx(
    images: *const c_char,
    out: *mut *mut JsccDataset,
) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        let path = match utf8_arg(images, "images") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match load_idx(&path, None) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(JsccDataset { inner: ds }));
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Returns the number of examples in the dataset, or 0 for a null handle.
///
/// # Safety
///
/// `ds`, when non-null, must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_len(ds: *const JsccDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    (*ds).inner.len()
}

/// Returns the number of pixels per example, or 0 for a null handle.
///
/// # Safety
///
/// `ds`, when non-null, must be a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_dim(ds: *const JsccDataset) -> usize {
    if ds.is_null() {
        return 0;
    }
    (*ds).inner.dim()
}

/// Copies example `index` into `out` (capacity `out_cap` doubles). Needs
/// `out_cap >= jscc_dataset_dim(ds)`.
///
/// # Safety
///
/// `ds` must be a live dataset handle and `out` must point to at least
/// `out_cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_row(
    ds: *const JsccDataset,
    index: usize,
    out: *mut f64,
    out_cap: usize,
) -> JsccStatus {
    guarded(|| {
        if ds.is_null() || out.is_null() {
            return fail(JsccStatus::NullPointer, "ds or out is null");
        }
        let data = &(*ds).inner;
        if index >= data.len() {
            return fail(
                JsccStatus::InvalidArgument,
                &format!("index {index} out of range for {} examples", data.len()),
            );
        }
        let row = data.x.row(index);
        if out_cap < row.len() {
            return fail(
                JsccStatus::BufferTooSmall,
                &format!("need capacity {}, got {out_cap}", row.len()),
            );
        }
        std::ptr::copy_nonoverlapping(row.as_ptr(), out, row.len());
        ok()
    })
}

/// Frees a dataset handle. Null is ignored.
///
/// # Safety
///
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jscc_dataset_free(ds: *mut JsccDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Loads a model checkpoint and stores a new handle in `*out`.
///
/// # Safety
///
/// `path` must be a NUL-terminated path and `out` a valid slot pointer.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_load(
    path: *const c_char,
    out: *mut *mut JsccModel,
) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        let path = match utf8_arg(path, "path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match jscc_core::checkpoint::load_model(&path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(JsccModel { inner: model }));
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Saves a model to a checkpoint file.
///
/// # Safety
///
/// `model` must be a live model handle and `path` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_save(
    model: *const JsccModel,
    path: *const c_char,
) -> JsccStatus {
    guarded(|| {
        if model.is_null() {
            return fail(JsccStatus::NullPointer, "model is null");
        }
        let path = match utf8_arg(path, "path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        match jscc_core::checkpoint::save_model(&path, &(*model).inner) {
            Ok(()) => ok(),
            Err(e) => lib_err(e),
        }
    })
}

/// Returns the model input dimension, or 0 for a null handle.
///
/// # Safety
///
/// `model`, when non-null, must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_input_dim(model: *const JsccModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).inner.input_dim()
}

/// Returns the number of code bits, or 0 for a null handle.
///
/// # Safety
///
/// `model`, when non-null, must be a live model handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_code_bits(model: *const JsccModel) -> usize {
    if model.is_null() {
        return 0;
    }
    (*model).inner.code_bits()
}

/// Encodes one example into per-bit code probabilities. `x` holds
/// `x_len == jscc_model_input_dim(model)` pixels; `out` needs capacity
/// `jscc_model_code_bits(model)`.
///
/// # Safety
///
/// `model` must be a live handle; `x` must point to `x_len` readable
/// doubles and `out` to `out_cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_encode(
    model: *const JsccModel,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_cap: usize,
) -> JsccStatus {
    guarded(|| {
        if model.is_null() || x.is_null() || out.is_null() {
            return fail(JsccStatus::NullPointer, "model, x, or out is null");
        }
        let model = &(*model).inner;
        if x_len != model.input_dim() {
            return fail(
                JsccStatus::InvalidArgument,
                &format!("x_len {x_len} != input dim {}", model.input_dim()),
            );
        }
        if out_cap < model.code_bits() {
            return fail(
                JsccStatus::BufferTooSmall,
                &format!("need capacity {}, got {out_cap}", model.code_bits()),
            );
        }
        let xs = std::slice::from_raw_parts(x, x_len).to_vec();
        let input = match Tensor::from_vec(1, x_len, xs) {
            Ok(t) => t,
            Err(e) => return lib_err(e),
        };
        match model.encode(&input) {
            Ok(f) => {
                std::ptr::copy_nonoverlapping(f.row(0).as_ptr(), out, model.code_bits());
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Runs one example through the full pipeline — encode, sample a binary
/// code, flip bits with probability `epsilon`, decode — and writes the
/// reconstructed pixel probabilities. The draw is deterministic in `seed`.
/// `out` needs capacity `jscc_model_input_dim(model)`.
///
/// # Safety
///
/// Same pointer contracts as [`jscc_model_encode`].
#[no_mangle]
pub unsafe extern "C" fn jscc_model_reconstruct(
    model: *const JsccModel,
    x: *const f64,
    x_len: usize,
    epsilon: f64,
    seed: u64,
    out: *mut f64,
    out_cap: usize,
) -> JsccStatus {
    guarded(|| {
        if model.is_null() || x.is_null() || out.is_null() {
            return fail(JsccStatus::NullPointer, "model, x, or out is null");
        }
        let model = &(*model).inner;
        if x_len != model.input_dim() {
            return fail(
                JsccStatus::InvalidArgument,
                &format!("x_len {x_len} != input dim {}", model.input_dim()),
            );
        }
        if out_cap < model.input_dim() {
            return fail(
                JsccStatus::BufferTooSmall,
                &format!("need capacity {}, got {out_cap}", model.input_dim()),
            );
        }
        let spec = match ChannelSpec::new(epsilon) {
            Ok(s) => s,
            Err(e) => return lib_err(e),
        };
        let xs = std::slice::from_raw_parts(x, x_len).to_vec();
        let run = || -> jscc_core::Result<Tensor> {
            let input = Tensor::from_vec(1, x_len, xs)?;
            let f = model.encode(&input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let code = sample_code(&f, &mut rng)?;
            let noisy = transmit(&code, &spec, &mut rng)?;
            model.decode(&noisy)
        };
        match run() {
            Ok(recon) => {
                std::ptr::copy_nonoverlapping(recon.row(0).as_ptr(), out, model.input_dim());
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Frees a model handle. Null is ignored.
///
/// # Safety
///
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jscc_model_free(model: *mut JsccModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs a full training experiment from a configuration file: trains,
/// evaluates, writes the run directory (config, metrics CSV, best and
/// final checkpoints, summary), and stores a report handle in `*out`.
///
/// # Safety
///
/// `config_path` must be a NUL-terminated path and `out` a valid slot
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_experiment(
    config_path: *const c_char,
    out: *mut *mut JsccRunReport,
) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        let path = match utf8_arg(config_path, "config_path") {
            Ok(p) => PathBuf::from(p),
            Err(status) => return status,
        };
        let cfg = match RunConfig::from_file(&path) {
            Ok(c) => c,
            Err(e) => return lib_err(e),
        };
        match run_experiment(&cfg) {
            Ok(report) => {
                let handle = JsccRunReport {
                    dir: cstring_from_path(&report.dir),
                    config_path: cstring_from_path(&report.config_path),
                    metrics_path: cstring_from_path(&report.metrics_path),
                    best_checkpoint: cstring_from_path(&report.best_checkpoint),
                    final_checkpoint: cstring_from_path(&report.final_checkpoint),
                    summary_path: cstring_from_path(&report.summary_path),
                    test_mse: report.test_mse,
                    epochs_run: report.outcome.history.len(),
                    best_epoch: report.outcome.best_epoch,
                    best_valid_mse: report.outcome.best_valid_mse,
                };
                *out = Box::into_raw(Box::new(handle));
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Returns the run directory path, owned by the report. Null handle gives
/// an empty string.
///
/// # Safety
///
/// `report`, when non-null, must be a live report handle; the returned
/// pointer is valid until the report is freed.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_dir(report: *const JsccRunReport) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).dir.as_ptr()
}

/// Returns the canonical config path written into the run directory.
///
/// # Safety
///
/// Same contract as [`jscc_run_report_dir`].
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_config(report: *const JsccRunReport) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).config_path.as_ptr()
}

/// Returns the metrics CSV path.
///
/// # Safety
///
/// Same contract as [`jscc_run_report_dir`].
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_metrics(report: *const JsccRunReport) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).metrics_path.as_ptr()
}

/// Returns the best-validation checkpoint path.
///
/// # Safety
///
/// Same contract as [`jscc_run_report_dir`].
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_best_checkpoint(
    report: *const JsccRunReport,
) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).best_checkpoint.as_ptr()
}

/// Returns the final-epoch checkpoint path.
///
/// # Safety
///
/// Same contract as [`jscc_run_report_dir`].
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_final_checkpoint(
    report: *const JsccRunReport,
) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).final_checkpoint.as_ptr()
}

/// Returns the human-readable summary path.
///
/// # Safety
///
/// Same contract as [`jscc_run_report_dir`].
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_summary(report: *const JsccRunReport) -> *const c_char {
    if report.is_null() {
        return empty_cstr();
    }
    (*report).summary_path.as_ptr()
}

/// Returns the held-out MSE of the best model, or NaN for a null handle.
///
/// # Safety
///
/// `report`, when non-null, must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_test_mse(report: *const JsccRunReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).test_mse
}

/// Returns the number of epochs actually run, or 0 for a null handle.
///
/// # Safety
///
/// `report`, when non-null, must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_epochs_run(report: *const JsccRunReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).epochs_run
}

/// Returns the 1-based epoch with the best validation MSE, or 0 for a
/// null handle.
///
/// # Safety
///
/// `report`, when non-null, must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_best_epoch(report: *const JsccRunReport) -> usize {
    if report.is_null() {
        return 0;
    }
    (*report).best_epoch
}

/// Returns the best validation MSE, or NaN for a null handle.
///
/// # Safety
///
/// `report`, when non-null, must be a live report handle.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_best_valid_mse(report: *const JsccRunReport) -> f64 {
    if report.is_null() {
        return f64::NAN;
    }
    (*report).best_valid_mse
}

/// Frees a run-report handle. Null is ignored.
///
/// # Safety
///
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn jscc_run_report_free(report: *mut JsccRunReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Estimates mean reconstruction MSE of `model` over `ds` at noise level
/// `epsilon`, averaging `draws` independent transmissions per example with
/// a deterministic stream seeded by `seed`. Writes the result to `*out`.
///
/// # Safety
///
/// `model` and `ds` must be live handles; `out` must point to a writable
/// double.
#[no_mangle]
pub unsafe extern "C" fn jscc_evaluate(
    model: *const JsccModel,
    ds: *const JsccDataset,
    epsilon: f64,
    draws: usize,
    seed: u64,
    out: *mut f64,
) -> JsccStatus {
    guarded(|| {
        if model.is_null() || ds.is_null() || out.is_null() {
            return fail(JsccStatus::NullPointer, "model, ds, or out is null");
        }
        let spec = match ChannelSpec::new(epsilon) {
            Ok(s) => s,
            Err(e) => return lib_err(e),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match evaluate(&(*model).inner, &(*ds).inner, &spec, draws, &mut rng) {
            Ok(mse) => {
                *out = mse;
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Runs the built-in self-test battery. Returns `Ok` when every check
/// passes; otherwise `SelftestFailed` with the failing checks listed in
/// the thread error message.
#[no_mangle]
pub extern "C" fn jscc_selftest(seed: u64) -> JsccStatus {
    guarded(|| {
        let outcomes = jscc_core::selftest::run_selftest(seed);
        let failures: Vec<String> = outcomes
            .iter()
            .filter(|o| !o.passed)
            .map(|o| format!("{}: {}", o.name, o.detail))
            .collect();
        if failures.is_empty() {
            ok()
        } else {
            fail(JsccStatus::SelftestFailed, &failures.join("; "))
        }
    })
}

/// Writes the binary entropy of `p` in bits to `*out`.
///
/// # Safety
///
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn jscc_binary_entropy(p: f64, out: *mut f64) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        match jscc_core::sscc::binary_entropy(p) {
            Ok(h) => {
                *out = h;
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}

/// Writes to `*out` the channel uses a capacity-achieving separate design
/// needs to move `source_bits` bits across a channel with flip probability
/// `epsilon`.
///
/// # Safety
///
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn jscc_sscc_bits(
    source_bits: f64,
    epsilon: f64,
    out: *mut f64,
) -> JsccStatus {
    guarded(|| {
        if out.is_null() {
            return fail(JsccStatus::NullPointer, "out is null");
        }
        match jscc_core::sscc::sscc_bits(source_bits, epsilon) {
            Ok(uses) => {
                *out = uses;
                ok()
            }
            Err(e) => lib_err(e),
        }
    })
}
