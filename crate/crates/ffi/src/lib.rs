//! C ABI for lacunary-core.
//!
//! Every fallible call returns a [`LacunaryStatus`]; results go through out
//! pointers. On failure, [`lacunary_last_error`] returns a message for the
//! calling thread. Shapes and gap laws are opaque handles created from JSON
//! (the same wire format as the CLI config) and released with the matching
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lacunary_core::error::LabError;
use lacunary_core::limits::{clt_test, kefp_classify, KefpVerdict, Verdict};
use lacunary_core::periodic::{ShapeFunction, ShapeSpec};
use lacunary_core::schedule;
use lacunary_core::variance::{ax_closed_form, ax_monte_carlo, ax_series, variance_report};
use lacunary_core::walk::{decay_fit, mod1_density, GapDistribution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LacunaryStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Unsupported = 3,
    DegenerateFit = 4,
    InvalidUtf8 = 5,
    InvalidJson = 6,
    BufferSize = 7,
    Panic = 8,
}

/// Opaque periodic function.
pub struct LacunaryShape(ShapeFunction);

/// Opaque gap distribution.
pub struct LacunaryGaps(GapDistribution);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LacunaryDecayFit {
    /// Envelope constant: gap_n <= c * w^n at every fitted step.
    pub c: f64,
    pub c_fit: f64,
    pub w: f64,
    pub r_squared: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LacunaryKefpResult {
    pub partial_integral: f64,
    pub exponent: f64,
    pub converges: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LacunaryTestSummary {
    pub statistic: f64,
    /// NaN when the test has no p-value.
    pub p_value: f64,
    pub passed: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LacunaryStatus, String);

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        let status = match e {
            LabError::InvalidInput(_) => LacunaryStatus::InvalidInput,
            LabError::Unsupported(_) => LacunaryStatus::Unsupported,
            LabError::DegenerateFit(_) => LacunaryStatus::DegenerateFit,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LacunaryStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LacunaryStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            LacunaryStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(LacunaryStatus::NullPointer, format!("{what} is null"))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(LacunaryStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure(LacunaryStatus::InvalidJson, e.to_string()))
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lacunary_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lacunary_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from a `lacunary_*` function that returns an owned string
/// and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lacunary_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Build a shape from JSON, e.g. `{"type":"trig","cos":[1],"sin":[]}` or
/// `{"type":"sampled","values":[...]}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_shape_from_json(json: *const c_char, out: *mut *mut LacunaryShape) -> LacunaryStatus {
    guard(|| {
        let spec: ShapeSpec = parse_json(read_str(json, "json")?)?;
        let shape = ShapeFunction::try_from(spec)?;
        put(out, Box::into_raw(Box::new(LacunaryShape(shape))), "out")
    })
}

/// # Safety
/// `shape` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lacunary_shape_free(shape: *mut LacunaryShape) {
    if !shape.is_null() {
        drop(Box::from_raw(shape));
    }
}

/// # Safety
/// `shape` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_shape_evaluate(shape: *const LacunaryShape, t: f64, out: *mut f64) -> LacunaryStatus {
    guard(|| put(out, get(shape, "shape")?.0.evaluate(t), "out"))
}

/// # Safety
/// `shape` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_shape_l2_norm_sq(shape: *const LacunaryShape, out: *mut f64) -> LacunaryStatus {
    guard(|| put(out, get(shape, "shape")?.0.l2_norm_sq(), "out"))
}

/// `∫_0^1 f(u) f(u + t) du`.
///
/// # Safety
/// `shape` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_shape_autocorrelation(
    shape: *const LacunaryShape,
    t: f64,
    out: *mut f64,
) -> LacunaryStatus {
    guard(|| put(out, get(shape, "shape")?.0.autocorrelation(t), "out"))
}

/// Build a gap law from JSON, e.g. `{"kind":"uniform","a":0,"b":1}`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_gaps_from_json(json: *const c_char, out: *mut *mut LacunaryGaps) -> LacunaryStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        // parse the wire form first so that bad parameters report as
        // invalid input rather than as JSON errors
        let spec: lacunary_core::walk::GapSpec = parse_json(text)?;
        let gaps = GapDistribution::try_from(spec)?;
        put(out, Box::into_raw(Box::new(LacunaryGaps(gaps))), "out")
    })
}

/// # Safety
/// `gaps` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lacunary_gaps_free(gaps: *mut LacunaryGaps) {
    if !gaps.is_null() {
        drop(Box::from_raw(gaps));
    }
}

/// Closed-form `A_x`; trigonometric polynomials only.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_ax_closed_form(
    shape: *const LacunaryShape,
    gaps: *const LacunaryGaps,
    x: f64,
    out: *mut f64,
) -> LacunaryStatus {
    guard(|| {
        let v = ax_closed_form(&get(shape, "shape")?.0, &get(gaps, "gaps")?.0, x)?;
        put(out, v, "out")
    })
}

/// Truncated series estimate. `out_tail_bound` receives NaN when no bound
/// is available; it may be NULL.
///
/// # Safety
/// Handles must be live; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_ax_series(
    shape: *const LacunaryShape,
    gaps: *const LacunaryGaps,
    x: f64,
    truncation: u32,
    grid_size: usize,
    out_value: *mut f64,
    out_tail_bound: *mut f64,
) -> LacunaryStatus {
    guard(|| {
        let s = ax_series(&get(shape, "shape")?.0, &get(gaps, "gaps")?.0, x, truncation, grid_size)?;
        put(out_value, s.value, "out_value")?;
        if !out_tail_bound.is_null() {
            out_tail_bound.write(s.tail_bound.unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// Monte Carlo estimate and its standard error. Deterministic in `seed`.
///
/// # Safety
/// Handles must be live; both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_ax_monte_carlo(
    shape: *const LacunaryShape,
    gaps: *const LacunaryGaps,
    x: f64,
    truncation: u32,
    reps: u64,
    seed: u64,
    out_estimate: *mut f64,
    out_std_err: *mut f64,
) -> LacunaryStatus {
    guard(|| {
        if out_estimate.is_null() || out_std_err.is_null() {
            return Err(null("out pointer"));
        }
        let mc = ax_monte_carlo(&get(shape, "shape")?.0, &get(gaps, "gaps")?.0, x, truncation, reps, seed)?;
        out_estimate.write(mc.estimate);
        out_std_err.write(mc.std_err);
        Ok(())
    })
}

/// All three estimates as a JSON document; free it with
/// [`lacunary_string_free`].
///
/// # Safety
/// Handles must be live; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_variance_report_json(
    shape: *const LacunaryShape,
    gaps: *const LacunaryGaps,
    x: f64,
    truncation: u32,
    grid_size: usize,
    reps: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> LacunaryStatus {
    guard(|| {
        let r = variance_report(
            &get(shape, "shape")?.0,
            &get(gaps, "gaps")?.0,
            x,
            truncation,
            grid_size,
            reps,
            seed,
        )?;
        let text = serde_json::to_string(&r).expect("report serializes");
        put(out_json, CString::new(text).expect("no nul in JSON").into_raw(), "out_json")
    })
}

/// Density of `S_step x mod 1` on `grid_size` points, written into `buf`,
/// which must hold exactly `grid_size` doubles.
///
/// # Safety
/// `gaps` must be live; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn lacunary_mod1_density(
    gaps: *const LacunaryGaps,
    x: f64,
    step: u32,
    grid_size: usize,
    buf: *mut f64,
    len: usize,
) -> LacunaryStatus {
    guard(|| {
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len != grid_size {
            return Err(Failure(
                LacunaryStatus::BufferSize,
                format!("buffer holds {len} values, grid has {grid_size}"),
            ));
        }
        let p = mod1_density(&get(gaps, "gaps")?.0, x, step, grid_size)?;
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&p.values);
        Ok(())
    })
}

/// Geometric decay fit of the uniformity gap over steps `2..=n_max`.
///
/// # Safety
/// `gaps` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_decay_fit(
    gaps: *const LacunaryGaps,
    x: f64,
    n_max: u32,
    grid_size: usize,
    out: *mut LacunaryDecayFit,
) -> LacunaryStatus {
    guard(|| {
        let fit = decay_fit(&get(gaps, "gaps")?.0, x, n_max, grid_size)?;
        put(
            out,
            LacunaryDecayFit {
                c: fit.c,
                c_fit: fit.c_fit,
                w: fit.w,
                r_squared: fit.r_squared,
            },
            "out",
        )
    })
}

/// KS test of the normalized partial sums against N(0, 1).
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_clt_test(
    shape: *const LacunaryShape,
    gaps: *const LacunaryGaps,
    x: f64,
    n: u64,
    reps: u64,
    seed: u64,
    out: *mut LacunaryTestSummary,
) -> LacunaryStatus {
    guard(|| {
        let r = clt_test(&get(shape, "shape")?.0, &get(gaps, "gaps")?.0, x, n, reps, seed)?;
        put(
            out,
            LacunaryTestSummary {
                statistic: r.statistic,
                p_value: r.p_value.unwrap_or(f64::NAN),
                passed: r.verdict == Verdict::Pass,
            },
            "out",
        )
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lacunary_kefp_classify(a: f64, t_max: f64, out: *mut LacunaryKefpResult) -> LacunaryStatus {
    guard(|| {
        let r = kefp_classify(a, t_max)?;
        put(
            out,
            LacunaryKefpResult {
                partial_integral: r.partial_integral,
                exponent: r.exponent,
                converges: r.verdict == KefpVerdict::Converges,
            },
            "out",
        )
    })
}

/// `Σ_{j≤k} ⌊√j⌋`
#[no_mangle]
pub extern "C" fn lacunary_m_tilde(k: u64) -> u64 {
    schedule::m_tilde(k)
}

/// `Σ_{j≤k} ⌊j^{1/4}⌋`
#[no_mangle]
pub extern "C" fn lacunary_m_hat(k: u64) -> u64 {
    schedule::m_hat(k)
}

#[no_mangle]
pub extern "C" fn lacunary_m(k: u64) -> u64 {
    schedule::m(k)
}

/// The block count `p` with `m_p <= n < m_{p+1}`; 0 when `n < 2`.
#[no_mangle]
pub extern "C" fn lacunary_p_of_n(n: u64) -> u64 {
    schedule::p_of_n(n)
}
