//! C ABI over `tcrisk`.
//!
//! Every function returns a [`TcrStatus`] and writes results through out
//! pointers. On failure [`tcr_last_error`] gives a message for the calling
//! thread. Noise laws are opaque [`TcrNoise`] handles released with
//! [`tcr_noise_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tcrisk::evt::{
    fit_gpd, BodyMode, GpdParams, NoiseModel, SplicedNoise, StandardNormalNoise, TailModel,
};
use tcrisk::garch::{filter, fit_qmle, GarchParams, InitRule, QmleOptions};
use tcrisk::risk::{
    avar_aggregate_bounds, avar_lower, avar_upper, one_day_avar, one_day_var, tc_avar_exact_mc,
    tc_avar_squared, tc_var_aggregate, tc_var_single, RiskQuery,
};
use tcrisk::timeseries::LossSeries;
use tcrisk::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LevelBelowTail = 3,
    InfiniteMean = 4,
    NoConvergence = 5,
    Numerical = 6,
    Data = 7,
    Panic = 99,
}

/// Selector for [`tcr_risk_measure`], passed as its integer value.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcrMeasure {
    /// One-day VaR `σ_{t+1} F_Z⁻¹(α)`; ignores `m`.
    OneDayVar = 0,
    /// One-day AVaR `σ_{t+1} κ̄(α)`; ignores `m`.
    OneDayAvar = 1,
    /// Time-consistent VaR of the loss `m` days ahead.
    TcVar = 2,
    /// Sum of `TcVar` over horizons `1..=m`.
    TcVarAggregate = 3,
    AvarUpper = 4,
    AvarLower = 5,
    /// Time-consistent AVaR of the squared loss.
    AvarSquared = 6,
    AvarUpperAggregate = 7,
    /// Sum of lower bounds. Not a bound on the aggregate.
    AvarLowerAggregateWeak = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcrGarchParams {
    pub a0: f64,
    pub a1: f64,
    pub b: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcrGarchFit {
    pub params: TcrGarchParams,
    /// Sandwich standard errors of `(a0, a1, b)`; NaN when unavailable.
    pub stderrs: [f64; 3],
    pub loglik: f64,
    /// `σ_{t+1}` after filtering the input with the fitted parameters.
    pub sigma_next: f64,
    pub n_obs: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcrGpdFit {
    pub xi: f64,
    pub beta: f64,
    /// NaN when the observed information is singular.
    pub xi_stderr: f64,
    pub beta_stderr: f64,
    pub loglik: f64,
    pub n: usize,
    pub converged: bool,
}

/// Opaque noise law.
pub struct TcrNoise {
    inner: Box<dyn NoiseModel>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TcrStatus {
    match e {
        Error::InvalidArgument(_) | Error::OutsideSupport { .. } => TcrStatus::InvalidArgument,
        Error::LevelBelowTail { .. } => TcrStatus::LevelBelowTail,
        Error::InfiniteMean { .. } | Error::SquaredTailUndefined { .. } => TcrStatus::InfiniteMean,
        Error::NoConvergence { .. } => TcrStatus::NoConvergence,
        Error::Quadrature(_) | Error::Degenerate(_) => TcrStatus::Numerical,
        _ => TcrStatus::Data,
    }
}

impl TryFrom<u32> for TcrMeasure {
    type Error = u32;

    fn try_from(v: u32) -> Result<Self, u32> {
        use TcrMeasure::*;
        Ok(match v {
            0 => OneDayVar,
            1 => OneDayAvar,
            2 => TcVar,
            3 => TcVarAggregate,
            4 => AvarUpper,
            5 => AvarLower,
            6 => AvarSquared,
            7 => AvarUpperAggregate,
            8 => AvarLowerAggregateWeak,
            _ => return Err(v),
        })
    }
}

struct Fail(TcrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(TcrStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TcrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TcrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            TcrStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn input<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { slice::from_raw_parts(data, len) })
}

unsafe fn noise_ref<'a>(noise: *const TcrNoise) -> Result<&'a dyn NoiseModel, Fail> {
    if noise.is_null() {
        return Err(null("noise"));
    }
    Ok(unsafe { (*noise).inner.as_ref() })
}

fn garch(p: &TcrGarchParams) -> Result<GarchParams, Fail> {
    Ok(GarchParams::new(p.a0, p.a1, p.b)?)
}

fn from_garch(p: &GarchParams) -> TcrGarchParams {
    TcrGarchParams {
        a0: p.a0(),
        a1: p.a1(),
        b: p.b(),
    }
}

fn tail(u: f64, fu: f64, xi: f64, beta: f64) -> Result<TailModel, Fail> {
    Ok(TailModel::new(u, fu, GpdParams::new(xi, beta)?)?)
}

fn boxed(noise: impl NoiseModel + 'static, out: *mut *mut TcrNoise) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let handle = Box::into_raw(Box::new(TcrNoise {
        inner: Box::new(noise),
    }));
    unsafe { out.write(handle) };
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tcr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tcr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Standard normal noise.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_normal(out: *mut *mut TcrNoise) -> TcrStatus {
    guard(|| boxed(StandardNormalNoise, out))
}

/// Symmetric noise whose tails above `u` follow a GPD(`xi`, `beta`) with
/// `P(Z ≤ u) = fu`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_spliced_tail(
    u: f64,
    fu: f64,
    xi: f64,
    beta: f64,
    out: *mut *mut TcrNoise,
) -> TcrStatus {
    guard(|| boxed(SplicedNoise::from_tail(tail(u, fu, xi, beta)?)?, out))
}

/// Spliced noise with the symmetrized empirical body of `residuals`.
///
/// # Safety
/// `residuals` must point to `n` readable doubles; `out` must be valid for a
/// pointer write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_spliced(
    residuals: *const f64,
    n: usize,
    u: f64,
    fu: f64,
    xi: f64,
    beta: f64,
    out: *mut *mut TcrNoise,
) -> TcrStatus {
    guard(|| {
        let z = unsafe { input(residuals, n, "residuals")? };
        let noise = SplicedNoise::new(z, tail(u, fu, xi, beta)?, BodyMode::Symmetrized)?;
        boxed(noise, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `noise` must come from a `tcr_noise_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_free(noise: *mut TcrNoise) {
    if !noise.is_null() {
        drop(unsafe { Box::from_raw(noise) });
    }
}

/// `F_Z⁻¹(alpha)`.
///
/// # Safety
/// `noise` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_quantile(
    noise: *const TcrNoise,
    alpha: f64,
    out: *mut f64,
) -> TcrStatus {
    guard(|| {
        let n = unsafe { noise_ref(noise)? };
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Fail(
                TcrStatus::InvalidArgument,
                format!("level {alpha} outside (0, 1)"),
            ));
        }
        unsafe { write(out, n.quantile(alpha), "out") }
    })
}

/// `F_{Z²}⁻¹(alpha)`.
///
/// # Safety
/// `noise` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_sq_quantile(
    noise: *const TcrNoise,
    alpha: f64,
    out: *mut f64,
) -> TcrStatus {
    guard(|| {
        let n = unsafe { noise_ref(noise)? };
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Fail(
                TcrStatus::InvalidArgument,
                format!("level {alpha} outside (0, 1)"),
            ));
        }
        unsafe { write(out, n.sq_quantile(alpha), "out") }
    })
}

/// `κ̄(alpha)`, the AVaR of `Z`.
///
/// # Safety
/// `noise` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_kappa(
    noise: *const TcrNoise,
    alpha: f64,
    out: *mut f64,
) -> TcrStatus {
    guard(|| {
        let n = unsafe { noise_ref(noise)? };
        unsafe { write(out, n.kappa(alpha)?, "out") }
    })
}

/// `κ̄₂(alpha)`, the AVaR of `Z²`.
///
/// # Safety
/// `noise` must be a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_noise_kappa2(
    noise: *const TcrNoise,
    alpha: f64,
    out: *mut f64,
) -> TcrStatus {
    guard(|| {
        let n = unsafe { noise_ref(noise)? };
        unsafe { write(out, n.kappa2(alpha)?, "out") }
    })
}

/// Evaluates one closed-form measure (a `TcrMeasure` value) at level `alpha`
/// and horizon `m`.
///
/// # Safety
/// `params` and `noise` must be valid; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_risk_measure(
    measure: u32,
    params: *const TcrGarchParams,
    sigma_next: f64,
    noise: *const TcrNoise,
    alpha: f64,
    m: usize,
    out: *mut f64,
) -> TcrStatus {
    guard(|| {
        let measure = TcrMeasure::try_from(measure)
            .map_err(|v| Fail(TcrStatus::InvalidArgument, format!("unknown measure {v}")))?;
        let p = garch(unsafe { params.as_ref() }.ok_or_else(|| null("params"))?)?;
        let q = RiskQuery::new(alpha, m, sigma_next, p, unsafe { noise_ref(noise)? })?;
        let v = match measure {
            TcrMeasure::OneDayVar => one_day_var(&q),
            TcrMeasure::OneDayAvar => one_day_avar(&q)?,
            TcrMeasure::TcVar => tc_var_single(&q),
            TcrMeasure::TcVarAggregate => tc_var_aggregate(&q),
            TcrMeasure::AvarUpper => avar_upper(&q)?,
            TcrMeasure::AvarLower => avar_lower(&q)?,
            TcrMeasure::AvarSquared => tc_avar_squared(&q)?,
            TcrMeasure::AvarUpperAggregate => avar_aggregate_bounds(&q)?.upper,
            TcrMeasure::AvarLowerAggregateWeak => avar_aggregate_bounds(&q)?.weak_lower,
        };
        unsafe { write(out, v, "out") }
    })
}

/// Monte Carlo estimate of the time-consistent AVaR `m` days ahead.
/// Deterministic in `(seed, alpha, m)`.
///
/// # Safety
/// `params` and `noise` must be valid; `estimate` and `stderr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tcr_tc_avar_mc(
    params: *const TcrGarchParams,
    sigma_next: f64,
    noise: *const TcrNoise,
    alpha: f64,
    m: usize,
    n_draws: usize,
    seed: u64,
    estimate: *mut f64,
    stderr: *mut f64,
) -> TcrStatus {
    guard(|| {
        let p = garch(unsafe { params.as_ref() }.ok_or_else(|| null("params"))?)?;
        let q = RiskQuery::new(alpha, m, sigma_next, p, unsafe { noise_ref(noise)? })?;
        if estimate.is_null() || stderr.is_null() {
            return Err(null("estimate/stderr"));
        }
        let r = tc_avar_exact_mc(&q, n_draws, seed)?;
        unsafe {
            write(estimate, r.estimate, "estimate")?;
            write(stderr, r.stderr, "stderr")
        }
    })
}

/// Runs the volatility filter over `n` losses started at the unconditional
/// variance. `sigmas` and `residuals` may each be null or point to `n`
/// writable doubles.
///
/// # Safety
/// Pointer arguments must satisfy the lengths above.
#[no_mangle]
pub unsafe extern "C" fn tcr_garch_filter(
    losses: *const f64,
    n: usize,
    params: *const TcrGarchParams,
    sigmas: *mut f64,
    residuals: *mut f64,
    sigma_next: *mut f64,
) -> TcrStatus {
    guard(|| {
        let x = unsafe { input(losses, n, "losses")? };
        if x.is_empty() {
            return Err(Fail(TcrStatus::InvalidArgument, "empty loss series".into()));
        }
        let p = garch(unsafe { params.as_ref() }.ok_or_else(|| null("params"))?)?;
        let path = filter(x, &p, InitRule::Unconditional);
        if !sigmas.is_null() {
            let dst = unsafe { slice::from_raw_parts_mut(sigmas, n) };
            dst.copy_from_slice(&path.sigmas());
        }
        if !residuals.is_null() {
            let dst = unsafe { slice::from_raw_parts_mut(residuals, n) };
            dst.copy_from_slice(&path.residuals);
        }
        unsafe { write(sigma_next, path.sigma_next, "sigma_next") }
    })
}

/// Quasi maximum likelihood fit of GARCH(1,1) to `n` losses.
///
/// On `TCR_STATUS_NO_CONVERGENCE` nothing is written. A fit that stops at the
/// iteration limit is still written with `converged = false`.
///
/// # Safety
/// `losses` must point to `n` readable doubles; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_fit_garch(
    losses: *const f64,
    n: usize,
    out: *mut TcrGarchFit,
) -> TcrStatus {
    guard(|| {
        let x = unsafe { input(losses, n, "losses")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let series = LossSeries::new(x.to_vec())?;
        let opts = QmleOptions::default();
        let fit = fit_qmle(&series, &opts)?;
        let path = filter(x, &fit.params, opts.init);
        let fit = TcrGarchFit {
            params: from_garch(&fit.params),
            stderrs: fit.stderrs.unwrap_or([f64::NAN; 3]),
            loglik: fit.loglik,
            sigma_next: path.sigma_next,
            n_obs: fit.n_obs,
            converged: fit.converged,
        };
        unsafe { write(out, fit, "out") }
    })
}

/// Maximum likelihood GPD fit to `n` positive threshold excesses.
///
/// # Safety
/// `excesses` must point to `n` readable doubles; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn tcr_fit_gpd(
    excesses: *const f64,
    n: usize,
    out: *mut TcrGpdFit,
) -> TcrStatus {
    guard(|| {
        let y = unsafe { input(excesses, n, "excesses")? };
        if out.is_null() {
            return Err(null("out"));
        }
        let fit = fit_gpd(y)?;
        let (xi_se, beta_se) = fit.stderr.unwrap_or((f64::NAN, f64::NAN));
        let fit = TcrGpdFit {
            xi: fit.params.xi(),
            beta: fit.params.beta(),
            xi_stderr: xi_se,
            beta_stderr: beta_se,
            loglik: fit.loglik,
            n: fit.n,
            converged: fit.converged,
        };
        unsafe { write(out, fit, "out") }
    })
}
