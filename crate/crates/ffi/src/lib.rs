//! C ABI over the grople library.
//!
//! Datasets and models are opaque heap handles released with the matching
//! `_free` function. Every fallible call returns a [`GropleStatus`]; on
//! failure the message is available from [`grople_last_error_message`] on
//! the same thread until the next failing call. Matrices are row-major
//! `double` arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use grople::baseline::RidgeBrModel;
use grople::dataset::MultiLabelDataset;
use grople::metrics::{MetricConventions, MetricReport};
use grople::model_file::Model;
use grople::predictor::{GropleClassifier, Hyperparameters};
use grople::{Error, Matrix};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GropleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    Dimension = 5,
    Numerical = 6,
    InvalidModel = 7,
    Panic = 8,
}

/// Opaque dataset handle.
pub struct GropleDataset(MultiLabelDataset);

/// Opaque fitted-model handle.
pub struct GropleModel(Model);

/// The scalar hyperparameters of a GroPLE fit; solver settings keep their
/// library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GropleHyperparameters {
    pub latent_dim: usize,
    pub n_groups: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub standardize: bool,
    pub bias: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GropleMetrics {
    pub accuracy: f64,
    pub example_f1: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GropleStatus {
    match e {
        Error::Parse { .. }
        | Error::LabelHeaderXml(_)
        | Error::EmptyHeader
        | Error::DuplicateLabel(_)
        | Error::MissingLabel(_)
        | Error::NonbinaryLabel(_)
        | Error::Json(_)
        | Error::Csv(_) => GropleStatus::Parse,
        Error::Io { .. } => GropleStatus::Io,
        Error::Dimension(_) => GropleStatus::Dimension,
        Error::SingularUpdate | Error::DegenerateBasis | Error::NumericalFailure(_) => {
            GropleStatus::Numerical
        }
        Error::InvalidModel(_) => GropleStatus::InvalidModel,
        Error::File { source, .. } => status_of(source),
        _ => GropleStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (GropleStatus, String)>) -> GropleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GropleStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GropleStatus::Panic
        }
    }
}

type Outcome<T> = Result<T, (GropleStatus, String)>;

fn lib<T>(r: grople::Result<T>) -> Outcome<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GropleStatus, String) {
    (GropleStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> (GropleStatus, String) {
    (GropleStatus::InvalidArgument, message.into())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Outcome<PathBuf> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn matrix_arg(data: *const f64, rows: usize, cols: usize, what: &str) -> Outcome<Matrix> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| invalid(format!("{what} size overflows")))?;
    if len == 0 {
        return Ok(Matrix::zeros(rows, cols));
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(Matrix::from_row_slice(rows, cols, std::slice::from_raw_parts(data, len)))
}

unsafe fn write_matrix(m: &Matrix, out: *mut f64) {
    for (i, row) in m.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            *out.add(i * m.ncols() + j) = *v;
        }
    }
}

unsafe fn model_ref<'a>(model: *const GropleModel) -> Outcome<&'a Model> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn dataset_ref<'a>(ds: *const GropleDataset) -> Outcome<&'a MultiLabelDataset> {
    ds.as_ref().map(|d| &d.0).ok_or_else(|| null("dataset"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn grople_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failing call on this thread, or NULL. The pointer is
/// valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn grople_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a MULAN ARFF + XML pair.
///
/// # Safety
/// `arff` and `xml` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_dataset_load(
    arff: *const c_char,
    xml: *const c_char,
    out: *mut *mut GropleDataset,
) -> GropleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ds = lib(MultiLabelDataset::load_mulan(&path_arg(arff, "arff")?, &path_arg(xml, "xml")?))?;
        *out = Box::into_raw(Box::new(GropleDataset(ds)));
        Ok(())
    })
}

/// Builds a dataset from row-major `x` (n x d) and `y` (n x l, entries -1/+1).
/// Features are named `x0..`, labels `y0..`.
///
/// # Safety
/// `x` must hold `n * d` doubles, `y` `n * l` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_dataset_from_arrays(
    x: *const f64,
    y: *const f64,
    n: usize,
    d: usize,
    l: usize,
    out: *mut *mut GropleDataset,
) -> GropleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let xm = matrix_arg(x, n, d, "x")?;
        let ym = matrix_arg(y, n, l, "y")?;
        let names = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect();
        let ds = lib(MultiLabelDataset::new("arrays", xm, ym, names("x", d), names("y", l)))?;
        *out = Box::into_raw(Box::new(GropleDataset(ds)));
        Ok(())
    })
}

/// Writes the instance, feature and label counts.
///
/// # Safety
/// `dataset` must come from this library; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_dataset_shape(
    dataset: *const GropleDataset,
    n: *mut usize,
    d: *mut usize,
    l: *mut usize,
) -> GropleStatus {
    guard(|| {
        let ds = dataset_ref(dataset)?;
        if n.is_null() || d.is_null() || l.is_null() {
            return Err(null("shape output"));
        }
        *n = ds.n_instances();
        *d = ds.n_features();
        *l = ds.n_labels();
        Ok(())
    })
}

/// # Safety
/// `dataset` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn grople_dataset_free(dataset: *mut GropleDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// The library's default hyperparameters.
#[no_mangle]
pub extern "C" fn grople_hyperparameters_default() -> GropleHyperparameters {
    let hp = Hyperparameters::default();
    GropleHyperparameters {
        latent_dim: hp.latent_dim,
        n_groups: hp.n_groups,
        lambda1: hp.lambda1,
        lambda2: hp.lambda2,
        alpha: hp.alpha,
        beta: hp.beta,
        seed: hp.seed,
        standardize: hp.standardize,
        bias: hp.bias,
    }
}

/// Fits a GroPLE model.
///
/// # Safety
/// `dataset` must come from this library; `hp` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn grople_fit(
    dataset: *const GropleDataset,
    hp: *const GropleHyperparameters,
    out: *mut *mut GropleModel,
) -> GropleStatus {
    guard(|| {
        let ds = dataset_ref(dataset)?;
        let h = hp.as_ref().ok_or_else(|| null("hyperparameters"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let full = Hyperparameters {
            latent_dim: h.latent_dim,
            n_groups: h.n_groups,
            lambda1: h.lambda1,
            lambda2: h.lambda2,
            alpha: h.alpha,
            beta: h.beta,
            seed: h.seed,
            standardize: h.standardize,
            bias: h.bias,
            ..Hyperparameters::default()
        };
        let model = lib(GropleClassifier::fit(ds, &full))?;
        *out = Box::into_raw(Box::new(GropleModel(Model::Grople(model))));
        Ok(())
    })
}

/// Fits the ridge binary-relevance baseline (`lambda > 0`).
///
/// # Safety
/// `dataset` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_ridge_fit(
    dataset: *const GropleDataset,
    lambda: f64,
    out: *mut *mut GropleModel,
) -> GropleStatus {
    guard(|| {
        let ds = dataset_ref(dataset)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = lib(RidgeBrModel::fit(ds, lambda, false, false))?;
        *out = Box::into_raw(Box::new(GropleModel(Model::RidgeBr(model))));
        Ok(())
    })
}

/// Number of labels the model predicts (0 for a null handle).
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn grople_model_n_labels(model: *const GropleModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.label_names().len())
}

/// Number of input features the model expects (0 for a null handle).
///
/// # Safety
/// `model` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn grople_model_n_features(model: *const GropleModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n_features())
}

unsafe fn apply(
    model: *const GropleModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
    f: impl Fn(&Model, &Matrix) -> grople::Result<Matrix>,
) -> GropleStatus {
    guard(|| {
        let m = model_ref(model)?;
        let xm = matrix_arg(x, n, d, "x")?;
        let result = lib(f(m, &xm))?;
        if result.len() > 0 {
            if out.is_null() {
                return Err(null("out"));
            }
            write_matrix(&result, out);
        }
        Ok(())
    })
}

/// Writes `n x L` scores `X Z V` (or `X W`) to `out`.
///
/// # Safety
/// `x` must hold `n * d` doubles and `out` room for `n * L` doubles.
#[no_mangle]
pub unsafe extern "C" fn grople_score(
    model: *const GropleModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> GropleStatus {
    apply(model, x, n, d, out, |m, x| m.score(x))
}

/// Writes `n x L` predictions in {-1, +1} to `out`.
///
/// # Safety
/// `x` must hold `n * d` doubles and `out` room for `n * L` doubles.
#[no_mangle]
pub unsafe extern "C" fn grople_predict(
    model: *const GropleModel,
    x: *const f64,
    n: usize,
    d: usize,
    out: *mut f64,
) -> GropleStatus {
    apply(model, x, n, d, out, |m, x| m.predict(x))
}

/// Writes the model as JSON.
///
/// # Safety
/// `model` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn grople_model_save(model: *const GropleModel, path: *const c_char) -> GropleStatus {
    guard(|| {
        let m = model_ref(model)?;
        lib(m.save(&path_arg(path, "path")?))
    })
}

/// Reads a model written by [`grople_model_save`] or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_model_load(path: *const c_char, out: *mut *mut GropleModel) -> GropleStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = lib(Model::load(&path_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(GropleModel(m)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn grople_model_free(model: *mut GropleModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The four metrics of `y_hat` against `y` (both `n x l`, row-major, -1/+1).
///
/// # Safety
/// `y` and `y_hat` must hold `n * l` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn grople_metrics(
    y: *const f64,
    y_hat: *const f64,
    n: usize,
    l: usize,
    out: *mut GropleMetrics,
) -> GropleStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let t = matrix_arg(y, n, l, "y")?;
        let p = matrix_arg(y_hat, n, l, "y_hat")?;
        let r = lib(MetricReport::compute(&t, &p, &MetricConventions::default()))?;
        *out = GropleMetrics {
            accuracy: r.accuracy,
            example_f1: r.example_f1,
            macro_f1: r.macro_f1,
            micro_f1: r.micro_f1,
        };
        Ok(())
    })
}

/// Nemenyi critical difference `q * sqrt(k (k + 1) / (6 n))`.
#[no_mangle]
pub extern "C" fn grople_nemenyi_cd(n_methods: usize, n_datasets: usize, q_alpha: f64) -> f64 {
    grople::metrics::nemenyi_cd(n_methods, n_datasets, q_alpha)
}
