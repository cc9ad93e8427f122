//! C ABI over the hsaug toolkit.
//!
//! Every entry point returns an [`HsaugStatus`]. On failure the message is
//! available from [`hsaug_last_error_message`] on the same thread. Strings
//! handed out by the library are released with [`hsaug_string_free`]; models
//! with [`hsaug_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hsaug::classifier::{predict, LinearModel};
use hsaug::corpus::{Label, Post, TargetIdentity};
use hsaug::evaluation::{alpha_nominal, aso_min_epsilon, AsoConfig};
use hsaug::generate::{build_prompt, PromptMode, PromptSpec};
use hsaug::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HsaugStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Format = 5,
    Undefined = 6,
    Panic = 7,
    Internal = 8,
}

/// Opaque handle to a trained linear classifier.
pub struct HsaugModel {
    inner: LinearModel,
}

/// Outcome of an ASO comparison of sample A against sample B.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HsaugAsoResult {
    pub epsilon: f64,
    pub epsilon_min: f64,
    pub bootstrap_std: f64,
    pub degenerate: bool,
    pub highly_significant: bool,
    pub significant: bool,
}

/// Reliability-matrix cell that holds no judgment.
pub const HSAUG_MISSING: i32 = -1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HsaugStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => HsaugStatus::Io,
            Error::Json(_) | Error::Parse { .. } | Error::Schema(_) => HsaugStatus::Format,
            Error::UndefinedAgreement(_) => HsaugStatus::Undefined,
            Error::Input(_) | Error::Contract(_) | Error::Config(_) | Error::Value { .. } => HsaugStatus::InvalidInput,
            _ => HsaugStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HsaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            HsaugStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside hsaug".into());
            HsaugStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(HsaugStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(HsaugStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    match (p.is_null(), len) {
        (_, 0) => Ok(&[]),
        (true, _) => Err(null(name)),
        (false, _) => Ok(std::slice::from_raw_parts(p, len)),
    }
}

fn out_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(HsaugStatus::Internal, "string contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn hsaug_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn hsaug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a model written by the training stage.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hsaug_model_load(path: *const c_char, out: *mut *mut HsaugModel) -> HsaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let inner = LinearModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(HsaugModel { inner }));
        Ok(())
    })
}

/// Score one text. `p_hateful` receives the probability, `hateful` the
/// decision (probability above one half). Either output may be NULL.
///
/// # Safety
/// `model` must come from [`hsaug_model_load`]; `text` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn hsaug_model_predict(
    model: *const HsaugModel,
    text: *const c_char,
    p_hateful: *mut f64,
    hateful: *mut bool,
) -> HsaugStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let (label, p) = predict(&model.inner, str_arg(text, "text")?);
        if !p_hateful.is_null() {
            *p_hateful = p;
        }
        if !hateful.is_null() {
            *hateful = label.is_hateful();
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or come from [`hsaug_model_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn hsaug_model_free(model: *mut HsaugModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Build a generation prompt.
///
/// With `n_demonstrations == 0` this is the finetuning prompt; otherwise a
/// few-shot prompt that needs exactly three demonstrations. `target` is a
/// target identity name or NULL for an untargeted prompt.
///
/// # Safety
/// String arguments must be NUL-terminated; `demonstrations` must hold
/// `n_demonstrations` pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hsaug_build_prompt(
    hateful: bool,
    target: *const c_char,
    demonstrations: *const *const c_char,
    n_demonstrations: usize,
    out: *mut *mut c_char,
) -> HsaugStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let label = Label::from_hateful(hateful);
        let target = match target.is_null() {
            true => None,
            false => Some(str_arg(target, "target")?.parse::<TargetIdentity>()?),
        };
        let demos = slice_arg(demonstrations, n_demonstrations, "demonstrations")?
            .iter()
            .enumerate()
            .map(|(i, &p)| Ok(Post::gold(format!("demo-{i}"), str_arg(p, "demonstration")?, label, target)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let spec = PromptSpec {
            mode: if demos.is_empty() { PromptMode::FinetuneExport } else { PromptMode::FewShot },
            intended_label: label,
            target,
            demonstrations: demos,
        };
        *out = out_string(build_prompt(&spec)?)?;
        Ok(())
    })
}

/// Almost Stochastic Order of scores `a` over `b` with bootstrap ε_min.
/// `bootstrap_iters == 0` keeps the default iteration count.
///
/// # Safety
/// `a` and `b` must hold `n_a` and `n_b` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hsaug_aso(
    a: *const f64,
    n_a: usize,
    b: *const f64,
    n_b: usize,
    bootstrap_iters: usize,
    seed: u64,
    out: *mut HsaugAsoResult,
) -> HsaugStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let mut config = AsoConfig {
            seed,
            ..AsoConfig::default()
        };
        if bootstrap_iters > 0 {
            config.bootstrap_iters = bootstrap_iters;
        }
        config.validate()?;
        let r = aso_min_epsilon(slice_arg(a, n_a, "a")?, slice_arg(b, n_b, "b")?, &config)?;
        *out = HsaugAsoResult {
            epsilon: r.epsilon,
            epsilon_min: r.epsilon_min,
            bootstrap_std: r.bootstrap_std,
            degenerate: r.degenerate,
            highly_significant: r.highly_significant,
            significant: r.significant,
        };
        Ok(())
    })
}

/// Nominal Krippendorff's alpha over a row-major `n_units` × `n_coders`
/// reliability matrix. Cells equal to [`HSAUG_MISSING`] are skipped.
///
/// # Safety
/// `values` must hold `n_units * n_coders` integers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hsaug_krippendorff_alpha(
    values: *const i32,
    n_units: usize,
    n_coders: usize,
    out: *mut f64,
) -> HsaugStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = n_units
            .checked_mul(n_coders)
            .ok_or_else(|| Failure(HsaugStatus::InvalidInput, "matrix size overflows".into()))?;
        let values = slice_arg(values, n, "values")?;
        let units: Vec<Vec<i32>> = values
            .chunks(n_coders.max(1))
            .map(|row| row.iter().copied().filter(|&v| v != HSAUG_MISSING).collect())
            .collect();
        *out = alpha_nominal(&units)?;
        Ok(())
    })
}
