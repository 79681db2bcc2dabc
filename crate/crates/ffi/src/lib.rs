//! C interface. Measures and chain models are opaque handles owned by the
//! caller and released with the matching `_free` function. Every fallible
//! call returns a [`SpecvarStatus`]; the message for the most recent failure
//! on the calling thread is available from [`specvar_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use specvar::brownian::{harmonic_estimate, WosConfig};
use specvar::chain::{clt_experiment, ChainModel};
use specvar::cli::{self, ChainSpec, Command, ExperimentConfig};
use specvar::cts::cts_variance;
use specvar::measures::SpectralMeasure;
use specvar::spectral::{covariance, sigma_squared, spectral_cdf, CdfRoute};
use specvar::variance_class::{
    classify_growth, variance_of_partial_sum, GrowthVerdict, VarianceMethod,
};
use specvar::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Divergent = 4,
    InvalidIntegrand = 5,
    DomainMismatch = 6,
    EmptyMeasure = 7,
    InvalidMeasure = 8,
    InvalidRegion = 9,
    MethodDisagreement = 10,
    Inconclusive = 11,
    SigmaInfinite = 12,
    PreconditionFailed = 13,
    OutOfRange = 14,
    ThetaInfinite = 15,
    BracketFailure = 16,
    StepLimit = 17,
    Io = 18,
    Panic = 19,
}

/// Route for [`specvar_variance`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarVarianceMethod {
    CovarianceSum = 0,
    Kernel = 1,
    Martingale = 2,
    All = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarVerdict {
    Linear = 0,
    Regular = 1,
    SlowlyVaryingMultiple = 2,
    Degenerate = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecvarGrowth {
    pub verdict: SpecvarVerdict,
    pub alpha_hat: f64,
    pub alpha_limit: f64,
    /// `K` for a linear verdict, `alpha` for a regular one, otherwise NaN.
    pub parameter: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecvarClt {
    pub b: f64,
    pub ks: f64,
    pub mean: f64,
    /// Variance of the normalized sums.
    pub variance: f64,
    pub spectral_variance: f64,
    pub b2_over_var: f64,
}

/// Opaque spectral measure.
pub struct SpecvarMeasure {
    inner: SpectralMeasure,
}

/// Opaque chain model.
pub struct SpecvarChain {
    inner: ChainModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

enum Fail {
    Null(&'static str),
    Utf8(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn status_of(e: &Error) -> SpecvarStatus {
    match e {
        Error::Divergent(_) => SpecvarStatus::Divergent,
        Error::InvalidIntegrand(_) => SpecvarStatus::InvalidIntegrand,
        Error::DomainMismatch { .. } => SpecvarStatus::DomainMismatch,
        Error::EmptyMeasure => SpecvarStatus::EmptyMeasure,
        Error::InvalidMeasure(_) => SpecvarStatus::InvalidMeasure,
        Error::InvalidRegion(_) => SpecvarStatus::InvalidRegion,
        Error::MethodDisagreement { .. } => SpecvarStatus::MethodDisagreement,
        Error::Inconclusive(_) => SpecvarStatus::Inconclusive,
        Error::SigmaInfinite => SpecvarStatus::SigmaInfinite,
        Error::PreconditionFailed(_) => SpecvarStatus::PreconditionFailed,
        Error::OutOfRange(_) => SpecvarStatus::OutOfRange,
        Error::ThetaInfinite => SpecvarStatus::ThetaInfinite,
        Error::BracketFailure { .. } => SpecvarStatus::BracketFailure,
        Error::StepLimit(_) => SpecvarStatus::StepLimit,
        Error::Config(_) => SpecvarStatus::Config,
        Error::Io(_) => SpecvarStatus::Io,
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> SpecvarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpecvarStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            SpecvarStatus::NullPointer
        }
        Ok(Err(Fail::Utf8(what))) => {
            set_last_error(format!("{what} is not valid UTF-8"));
            SpecvarStatus::InvalidUtf8
        }
        Ok(Err(Fail::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SpecvarStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn measure_arg<'a>(m: *const SpecvarMeasure) -> Result<&'a SpectralMeasure, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or(Fail::Null("measure"))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn specvar_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn specvar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Build a measure from its JSON document.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_measure_from_json(
    json: *const c_char,
    out: *mut *mut SpecvarMeasure,
) -> SpecvarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let inner = SpectralMeasure::from_json(text)?;
        *out = Box::into_raw(Box::new(SpecvarMeasure { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`specvar_measure_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn specvar_measure_free(m: *mut SpecvarMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_total_mass(
    m: *const SpecvarMeasure,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        *out_arg(out, "out")? = measure_arg(m)?.total_mass();
        Ok(())
    })
}

/// `cov(X_0, X_n)`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_covariance(
    m: *const SpecvarMeasure,
    n: u64,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        *out_arg(out, "out")? = covariance(m, n)?;
        Ok(())
    })
}

/// Limit of `var(S_n)/n`; infinity when it diverges.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_sigma_squared(
    m: *const SpecvarMeasure,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        *out_arg(out, "out")? = sigma_squared(m)?;
        Ok(())
    })
}

/// `var(S_n)`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_variance(
    m: *const SpecvarMeasure,
    n: u64,
    method: SpecvarVarianceMethod,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        let method = match method {
            SpecvarVarianceMethod::CovarianceSum => VarianceMethod::CovarianceSum,
            SpecvarVarianceMethod::Kernel => VarianceMethod::Kernel,
            SpecvarVarianceMethod::Martingale => VarianceMethod::Martingale,
            SpecvarVarianceMethod::All => VarianceMethod::All,
        };
        *out_arg(out, "out")? = variance_of_partial_sum(m, n, method)?.value;
        Ok(())
    })
}

/// Spectral distribution of the angles `[0, x]`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_spectral_cdf(
    m: *const SpecvarMeasure,
    x: f64,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        *out_arg(out, "out")? = spectral_cdf(m, x, CdfRoute::Harmonic)?;
        Ok(())
    })
}

/// Growth class of `var(S_n)` on a dyadic grid up to `n_max`.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_classify_growth(
    m: *const SpecvarMeasure,
    n_max: u64,
    out: *mut SpecvarGrowth,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        let out = out_arg(out, "out")?;
        let r = classify_growth(m, n_max)?;
        let (verdict, parameter) = match r.verdict {
            GrowthVerdict::Linear { k } => (SpecvarVerdict::Linear, k),
            GrowthVerdict::Regular { alpha } => (SpecvarVerdict::Regular, alpha),
            GrowthVerdict::SlowlyVaryingMultiple => {
                (SpecvarVerdict::SlowlyVaryingMultiple, f64::NAN)
            }
            GrowthVerdict::Degenerate => (SpecvarVerdict::Degenerate, f64::NAN),
        };
        *out = SpecvarGrowth {
            verdict,
            alpha_hat: r.alpha_hat,
            alpha_limit: r.alpha_limit,
            parameter,
        };
        Ok(())
    })
}

/// `var(S_T)` for a half-plane measure.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_cts_variance(
    m: *const SpecvarMeasure,
    t: f64,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        *out_arg(out, "out")? = cts_variance(m, t)?;
        Ok(())
    })
}

/// Walk-on-spheres estimate of the normalized boundary mass within `x` of
/// the real axis, with its standard error.
///
/// # Safety
/// `m` must be a live handle; `value` and `stderr_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_harmonic_estimate(
    m: *const SpecvarMeasure,
    x: f64,
    paths: u64,
    epsilon: f64,
    seed: u64,
    value: *mut f64,
    stderr_out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let m = measure_arg(m)?;
        let value = out_arg(value, "value")?;
        let se = out_arg(stderr_out, "stderr_out")?;
        let cfg = WosConfig {
            epsilon,
            seed,
            ..Default::default()
        };
        let e = harmonic_estimate(m, &[x], paths, &cfg)?;
        *value = e[0].value;
        *se = e[0].se;
        Ok(())
    })
}

/// Build a chain model from `{"family": ..., "params": {...}}`.
///
/// # Safety
/// `json` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_chain_from_json(
    json: *const c_char,
    out: *mut *mut SpecvarChain,
) -> SpecvarStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let spec: ChainSpec =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("chain: {e}")))?;
        let inner = ChainModel::build(spec.to_family()?)?;
        *out = Box::into_raw(Box::new(SpecvarChain { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must come from [`specvar_chain_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn specvar_chain_free(c: *mut SpecvarChain) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Mean holding time of the chain.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_chain_theta(
    c: *const SpecvarChain,
    out: *mut f64,
) -> SpecvarStatus {
    guard(|| {
        let c = c.as_ref().ok_or(Fail::Null("chain"))?;
        *out_arg(out, "out")? = c.inner.theta;
        Ok(())
    })
}

/// CLT experiment summary; the per-replication sums are not returned.
///
/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_chain_clt(
    c: *const SpecvarChain,
    n: u64,
    replications: usize,
    seed: u64,
    out: *mut SpecvarClt,
) -> SpecvarStatus {
    guard(|| {
        let c = c.as_ref().ok_or(Fail::Null("chain"))?;
        let out = out_arg(out, "out")?;
        let r = clt_experiment(&c.inner, n, replications, seed)?;
        *out = SpecvarClt {
            b: r.b,
            ks: r.ks,
            mean: r.mean,
            variance: r.variance,
            spectral_variance: r.spectral_variance,
            b2_over_var: r.b2_over_var,
        };
        Ok(())
    })
}

/// Run one experiment as the command-line tool would, writing
/// `summary.json` and CSV files into `out_dir`. `exit_code` receives the
/// tool's exit status (0 ok, 3 failed check); errors are returned as a status.
///
/// # Safety
/// String arguments must be NUL-terminated; `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_run_config(
    command: *const c_char,
    config_json: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> SpecvarStatus {
    guard(|| {
        let code = out_arg(exit_code, "exit_code")?;
        let name = str_arg(command, "command")?;
        let command: Command = serde_json::from_value(serde_json::Value::String(name.into()))
            .map_err(|_| Error::Config(format!("command: unknown command '{name}'")))?;
        let cfg = ExperimentConfig::parse(str_arg(config_json, "config_json")?)?;
        let dir = PathBuf::from(str_arg(out_dir, "out_dir")?);
        let o = cli::execute(command, &cfg)?;
        cli::write_outcome(&o, &dir)?;
        *code = if o.summary.passed { 0 } else { 3 };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_codes_are_stable() {
        assert_eq!(SpecvarStatus::Ok as i32, 0);
        assert_eq!(SpecvarStatus::SigmaInfinite as i32, 12);
        assert_eq!(status_of(&Error::StepLimit(3)), SpecvarStatus::StepLimit);
    }

    #[test]
    fn panics_become_status() {
        let s = guard(|| panic!("boom"));
        assert_eq!(s, SpecvarStatus::Panic);
        let msg = unsafe { CStr::from_ptr(specvar_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }
}
