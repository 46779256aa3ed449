//! C interface to `nmvm-core`.
//!
//! Objects are opaque heap handles created by `nmvm_*_new` style functions
//! and released with the matching `*_free`. Every fallible call returns an
//! [`NmvmStatus`]; on failure a description is available from
//! [`nmvm_last_error`] on the same thread. Output arrays are caller-owned and
//! their capacity is passed alongside.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nmvm_core::exp_opt::{self, ExcessReturnBounds, Solver};
use nmvm_core::general_opt::{self, ReducedBox, UtilitySpec};
use nmvm_core::large_market::{LargeMarketSpec, Sequence};
use nmvm_core::{Error, MarketModel, MixingDistribution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmvmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    BufferTooSmall = 4,
    Internal = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmvmUtility {
    Exponential = 0,
    Power = 1,
    Log = 2,
    Quadratic = 3,
}

pub struct NmvmModel(MarketModel);
pub struct NmvmMixing(MixingDistribution);
pub struct NmvmLargeMarket(LargeMarketSpec);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmvmExpOptSummary {
    pub q_min: f64,
    pub expected_utility: f64,
    pub ln_neg_expected_utility: f64,
    /// Infinite for mixing laws whose Laplace transform is entire.
    pub theta0: f64,
    pub scalar_a: f64,
    pub scalar_b: f64,
    pub scalar_c: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmvmGeneralOptSummary {
    pub phi: f64,
    pub psi: f64,
    pub rho: f64,
    pub m_value: f64,
    /// NaN when unavailable.
    pub truncation_gap: f64,
    pub at_rho_upper_bound: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> NmvmStatus {
    match e {
        Error::Infeasible { .. }
        | Error::EmptyDomain
        | Error::EmptyFeasibleRegion
        | Error::NoInteriorMinimum
        | Error::InfeasiblePoint(_) => NmvmStatus::Infeasible,
        Error::NoRoot | Error::BesselDomain(_) | Error::ThetaDomain { .. } => NmvmStatus::Internal,
        _ => NmvmStatus::InvalidArgument,
    }
}

enum Fail {
    Status(NmvmStatus, String),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> NmvmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NmvmStatus::Ok
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside nmvm");
            NmvmStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(NmvmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn fill(out: *mut f64, cap: usize, values: &[f64]) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output array"));
    }
    if cap < values.len() {
        return Err(Fail::Status(
            NmvmStatus::BufferTooSmall,
            format!("output array holds {cap} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Description of the last failure on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn nmvm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a market model from `n`-vectors `mu`, `gamma` and the row-major
/// `n × n` structure matrix `a`.
///
/// # Safety
/// `mu` and `gamma` must point to `n` values, `a` to `n * n` values, and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_model_new(
    n: usize,
    r_f: f64,
    mu: *const f64,
    gamma: *const f64,
    a: *const f64,
    out: *mut *mut NmvmModel,
) -> NmvmStatus {
    guard(|| {
        let m = MarketModel::new(
            r_f,
            slice(mu, n, "mu")?,
            slice(gamma, n, "gamma")?,
            slice(a, n.checked_mul(n).ok_or(Error::Dimension("n * n overflows".into()))?, "a")?,
        )?;
        write_out(out, Box::into_raw(Box::new(NmvmModel(m))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from [`nmvm_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nmvm_model_free(model: *mut NmvmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of assets, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nmvm_model_size(model: *const NmvmModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.n())
}

unsafe fn new_mixing(m: nmvm_core::Result<MixingDistribution>, out: *mut *mut NmvmMixing) -> NmvmStatus {
    guard(|| write_out(out, Box::into_raw(Box::new(NmvmMixing(m?))), "out"))
}

/// Degenerate mixing `Z ≡ value`.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_constant(value: f64, out: *mut *mut NmvmMixing) -> NmvmStatus {
    new_mixing(MixingDistribution::constant(value), out)
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_exponential(rate: f64, out: *mut *mut NmvmMixing) -> NmvmStatus {
    new_mixing(MixingDistribution::exponential(rate), out)
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_gig(lambda: f64, chi: f64, psi: f64, out: *mut *mut NmvmMixing) -> NmvmStatus {
    new_mixing(MixingDistribution::gig(lambda, chi, psi), out)
}

/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_bounded_uniform(lower: f64, upper: f64, out: *mut *mut NmvmMixing) -> NmvmStatus {
    new_mixing(MixingDistribution::bounded_uniform(lower, upper), out)
}

/// # Safety
/// `mix` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_free(mix: *mut NmvmMixing) {
    if !mix.is_null() {
        drop(Box::from_raw(mix));
    }
}

/// `E[e^{−sZ}]`.
///
/// # Safety
/// `mix` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_laplace(mix: *const NmvmMixing, s: f64, out: *mut f64) -> NmvmStatus {
    guard(|| {
        let m = mix.as_ref().ok_or_else(|| null("mix"))?;
        write_out(out, m.0.laplace(s)?, "out")
    })
}

/// `E[Z^r]`.
///
/// # Safety
/// `mix` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nmvm_mixing_moment(mix: *const NmvmMixing, r: f64, out: *mut f64) -> NmvmStatus {
    guard(|| {
        let m = mix.as_ref().ok_or_else(|| null("mix"))?;
        write_out(out, m.0.moment(r)?, "out")
    })
}

/// Exponential-utility optimum for risk aversion `a` and wealth `w0`. The
/// weights go to `x_out` (capacity `x_cap`, at least the model size).
///
/// # Safety
/// Handles must be live; `x_out` must hold `x_cap` values; `summary` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn nmvm_exp_opt(
    model: *const NmvmModel,
    mix: *const NmvmMixing,
    a: f64,
    w0: f64,
    x_out: *mut f64,
    x_cap: usize,
    summary: *mut NmvmExpOptSummary,
) -> NmvmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let z = mix.as_ref().ok_or_else(|| null("mix"))?;
        let r = exp_opt::optimize(&m.0, &z.0, a, w0, ExcessReturnBounds::default(), Solver::MinimizeH)?;
        fill(x_out, x_cap, &r.x_star)?;
        if let Some(s) = summary.as_mut() {
            *s = NmvmExpOptSummary {
                q_min: r.q_min,
                expected_utility: r.optimal_utility,
                ln_neg_expected_utility: r.ln_neg_utility,
                theta0: r.theta0,
                scalar_a: r.scalars.a,
                scalar_b: r.scalars.b,
                scalar_c: r.scalars.c,
            };
        }
        Ok(())
    })
}

/// Moment-expansion optimum of order `order` for the given utility family;
/// `param` is `a` (exponential), `eta` (power) or `b` (quadratic) and is
/// ignored for log utility.
///
/// # Safety
/// Handles must be live; `x_out` must hold `x_cap` values; `summary` may be
/// null.
#[no_mangle]
pub unsafe extern "C" fn nmvm_general_opt(
    model: *const NmvmModel,
    mix: *const NmvmMixing,
    utility: NmvmUtility,
    param: f64,
    order: usize,
    w0: f64,
    x_out: *mut f64,
    x_cap: usize,
    summary: *mut NmvmGeneralOptSummary,
) -> NmvmStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let z = mix.as_ref().ok_or_else(|| null("mix"))?;
        let u = match utility {
            NmvmUtility::Exponential => UtilitySpec::exponential(param)?,
            NmvmUtility::Power => UtilitySpec::power(param)?,
            NmvmUtility::Log => UtilitySpec::Log,
            NmvmUtility::Quadratic => UtilitySpec::quadratic(param)?,
        };
        let r = general_opt::general_optimize(&m.0, &z.0, &u, order, w0, &ReducedBox::default())?;
        fill(x_out, x_cap, &r.x)?;
        if let Some(s) = summary.as_mut() {
            *s = NmvmGeneralOptSummary {
                phi: r.point.phi,
                psi: r.point.psi,
                rho: r.point.rho,
                m_value: r.m_value,
                truncation_gap: r.truncation_gap.unwrap_or(f64::NAN),
                at_rho_upper_bound: r.at_rho_upper_bound,
            };
        }
        Ok(())
    })
}

/// A countable market whose coefficient sequences are `scale / i^exponent`,
/// mixed by a uniform law on `[lower, upper]`, usable up to `max_n` assets.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nmvm_large_market_new(
    gamma_scale: f64,
    gamma_exponent: f64,
    mu_scale: f64,
    mu_exponent: f64,
    beta_scale: f64,
    beta_exponent: f64,
    beta_bar_scale: f64,
    beta_bar_exponent: f64,
    lower: f64,
    upper: f64,
    max_n: usize,
    out: *mut *mut NmvmLargeMarket,
) -> NmvmStatus {
    guard(|| {
        let spec = LargeMarketSpec::new(
            Sequence::power(gamma_scale, gamma_exponent),
            Sequence::power(mu_scale, mu_exponent),
            Sequence::power(beta_scale, beta_exponent),
            Sequence::power(beta_bar_scale, beta_bar_exponent),
            MixingDistribution::bounded_uniform(lower, upper)?,
            max_n,
        )?;
        write_out(out, Box::into_raw(Box::new(NmvmLargeMarket(spec))), "out")
    })
}

/// # Safety
/// `lm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nmvm_large_market_free(lm: *mut NmvmLargeMarket) {
    if !lm.is_null() {
        drop(Box::from_raw(lm));
    }
}

/// Optimal expected disutility `U_n` of the first `n` assets.
///
/// # Safety
/// `lm` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nmvm_large_market_u(lm: *const NmvmLargeMarket, n: usize, out: *mut f64) -> NmvmStatus {
    guard(|| {
        let l = lm.as_ref().ok_or_else(|| null("lm"))?;
        write_out(out, l.0.u_n(n)?, "out")
    })
}
