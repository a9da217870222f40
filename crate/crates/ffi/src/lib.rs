//! C ABI for evopipe.
//!
//! Objects cross the boundary as opaque handles created by `evp_*` functions
//! and released by the matching `*_free`. Every fallible call returns an
//! [`EvpStatus`]; on failure, [`evp_last_error`] describes the error for the
//! calling thread. Strings returned to the caller are released with
//! [`evp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use evopipe::data::{bundled, decode_pmlb, Dataset};
use evopipe::harness::{resolve_dataset, run_experiment, ExperimentConfig, RunOptions};
use evopipe::learners::{HpValue, Hyperparameters};
use evopipe::operators::{default_registry, EstimatorFilter, Registry};
use evopipe::pipeline::{
    cv_score, export_pipeline, fit_pipeline, import_pipeline, make_residual_block_tree,
    ExportMetadata, FittedPipeline, PipelineTree,
};
use evopipe::{Error, Matrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dataset = 5,
    Config = 6,
    Validation = 7,
    Fit = 8,
    Timeout = 9,
    Version = 10,
    Internal = 11,
}

/// A labelled dataset.
pub struct EvpDataset(Dataset);

/// A pipeline tree with its export metadata.
pub struct EvpPipeline {
    tree: PipelineTree,
    meta: ExportMetadata,
}

/// A pipeline fitted on one dataset.
pub struct EvpFitted(FittedPipeline);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> EvpStatus {
    match e {
        Error::Io { .. } => EvpStatus::Io,
        Error::Parse { .. } | Error::Import { .. } => EvpStatus::Parse,
        Error::Http { .. } | Error::Network { .. } | Error::Dataset(_) => EvpStatus::Dataset,
        Error::Dimension { .. } | Error::InvalidArgument(_) | Error::Hyperparameter(_) => {
            EvpStatus::InvalidArgument
        }
        Error::FitFailure(_) | Error::PipelineFit { .. } => EvpStatus::Fit,
        Error::Timeout => EvpStatus::Timeout,
        Error::Registry(_) | Error::Template(_) | Error::Config(_) | Error::ResultFile { .. } => {
            EvpStatus::Config
        }
        Error::Validation { .. } => EvpStatus::Validation,
        Error::Version(_) => EvpStatus::Version,
    }
}

struct Fail(EvpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(EvpStatus::NullArgument, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EvpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EvpStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EvpStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(EvpStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Fail(EvpStatus::Internal, "string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn registry() -> Result<Registry, Fail> {
    Ok(default_registry(true, EstimatorFilter::All)?)
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `evp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn evp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn evp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn evp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a named dataset: `hill-valley`, `hill-valley-noisy` (optionally
/// `:ROWSxLENGTH`) or a bundled benchmark such as `breast-cancer-wisconsin`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_named(
    name: *const c_char,
    out: *mut *mut EvpDataset,
) -> EvpStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let ds = match bundled(name) {
            Some(bytes) => decode_pmlb(bytes, name)?,
            None => {
                let cfg = ExperimentConfig {
                    dataset: name.to_string(),
                    ..ExperimentConfig::default()
                };
                resolve_dataset(&cfg, &RunOptions::default())?
            }
        };
        put(out, EvpDataset(ds))
    })
}

/// Loads a CSV file (target column `target`, else the last column) or a
/// PMLB-format `.tsv.gz` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_load(
    path: *const c_char,
    out: *mut *mut EvpDataset,
) -> EvpStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let cfg = ExperimentConfig {
            dataset: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            data_path: Some(path),
            ..ExperimentConfig::default()
        };
        put(
            out,
            EvpDataset(resolve_dataset(&cfg, &RunOptions::default())?),
        )
    })
}

/// Builds a dataset from a row-major `rows × cols` feature array and labels
/// in `0..n_classes`.
///
/// # Safety
/// `features` must hold `rows * cols` doubles and `labels` `rows` values.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_from_arrays(
    features: *const f64,
    rows: usize,
    cols: usize,
    labels: *const usize,
    n_classes: usize,
    out: *mut *mut EvpDataset,
) -> EvpStatus {
    guard(|| {
        if features.is_null() || labels.is_null() {
            return Err(null("features or labels"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(EvpStatus::InvalidArgument, "rows * cols overflows".into()))?;
        let x = Matrix::new(
            rows,
            cols,
            std::slice::from_raw_parts(features, len).to_vec(),
        )?;
        let y = std::slice::from_raw_parts(labels, rows).to_vec();
        put(
            out,
            EvpDataset(Dataset::from_parts("arrays", x, y, n_classes)?),
        )
    })
}

/// Row count; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_rows(ds: *const EvpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_rows())
}

/// Feature count; 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_cols(ds: *const EvpDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n_features())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evp_dataset_free(ds: *mut EvpDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Parses an exported pipeline artifact.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_import(
    text: *const c_char,
    out: *mut *mut EvpPipeline,
) -> EvpStatus {
    guard(|| {
        let (tree, meta) = import_pipeline(str_arg(text, "text")?, &registry()?)?;
        put(out, EvpPipeline { tree, meta })
    })
}

/// The residual-block pipeline: three stacked logistic layers merged with
/// an identity branch under a logistic root, each layer trained full-batch
/// for `epochs` epochs at learning rate `lr`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_residual_block(
    epochs: i64,
    lr: f64,
    out: *mut *mut EvpPipeline,
) -> EvpStatus {
    guard(|| {
        let hp = Hyperparameters::new()
            .with("batch", HpValue::Cat("full".into()))
            .with("epochs", HpValue::Int(epochs))
            .with("l2", HpValue::Real(0.0))
            .with("lr", HpValue::Real(lr));
        let tree = make_residual_block_tree([hp.clone(), hp.clone(), hp.clone(), hp]);
        tree.validate(&registry()?)?;
        put(
            out,
            EvpPipeline {
                tree,
                meta: ExportMetadata::default(),
            },
        )
    })
}

/// Serialises a pipeline with its metadata.
///
/// # Safety
/// `p` must be a live pipeline handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_export(
    p: *const EvpPipeline,
    out: *mut *mut c_char,
) -> EvpStatus {
    guard(|| {
        let p = handle(p, "pipeline")?;
        put_string(out, export_pipeline(&p.tree, &p.meta))
    })
}

/// Operator-node count; 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live pipeline handle.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_complexity(p: *const EvpPipeline) -> usize {
    p.as_ref().map_or(0, |p| p.tree.complexity())
}

/// Mean `k`-fold cross-validated accuracy.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_cv_score(
    p: *const EvpPipeline,
    ds: *const EvpDataset,
    k: usize,
    seed: u64,
    out: *mut f64,
) -> EvpStatus {
    guard(|| {
        let (p, ds) = (handle(p, "pipeline")?, handle(ds, "dataset")?);
        if out.is_null() {
            return Err(null("output pointer"));
        }
        *out = cv_score(&p.tree, &registry()?, &ds.0, k, seed)?;
        Ok(())
    })
}

/// Fits a pipeline on every row of a dataset.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_fit(
    p: *const EvpPipeline,
    ds: *const EvpDataset,
    seed: u64,
    out: *mut *mut EvpFitted,
) -> EvpStatus {
    guard(|| {
        let (p, ds) = (handle(p, "pipeline")?, handle(ds, "dataset")?);
        put(
            out,
            EvpFitted(fit_pipeline(&p.tree, &registry()?, &ds.0, seed)?),
        )
    })
}

/// # Safety
/// `p` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evp_pipeline_free(p: *mut EvpPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Predicts class indices for a row-major `rows × cols` array into
/// `labels_out`, which must have room for `rows` values.
///
/// # Safety
/// `f` must be live; `features` must hold `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn evp_fitted_predict(
    f: *const EvpFitted,
    features: *const f64,
    rows: usize,
    cols: usize,
    labels_out: *mut usize,
) -> EvpStatus {
    guard(|| {
        let f = handle(f, "fitted pipeline")?;
        if features.is_null() || labels_out.is_null() {
            return Err(null("features or labels_out"));
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Fail(EvpStatus::InvalidArgument, "rows * cols overflows".into()))?;
        let x = Matrix::new(
            rows,
            cols,
            std::slice::from_raw_parts(features, len).to_vec(),
        )?;
        let labels = f.0.predict(&x)?;
        ptr::copy_nonoverlapping(labels.as_ptr(), labels_out, rows);
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evp_fitted_free(f: *mut EvpFitted) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Runs one experiment. `config_json` uses the result-file `config` schema;
/// omitted fields take their defaults. On success `out_json` receives the
/// result document.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evp_run_experiment(
    config_json: *const c_char,
    out_json: *mut *mut c_char,
) -> EvpStatus {
    guard(|| {
        let cfg: ExperimentConfig = serde_json::from_str(str_arg(config_json, "config_json")?)
            .map_err(|e| Fail(EvpStatus::Config, format!("config: {e}")))?;
        let result = run_experiment(&cfg, &RunOptions::default())?;
        let text =
            serde_json::to_string(&result).map_err(|e| Fail(EvpStatus::Internal, e.to_string()))?;
        put_string(out_json, text)
    })
}
