//! C ABI for the calibration toolkit.
//!
//! Conventions: functions return [`EpicalibStatus`] (0 = success) and write
//! results through caller-owned buffers; constructors return opaque handles
//! that must be released with their matching `_free` function. On any
//! failure a thread-local message is set, retrievable with
//! [`epicalib_last_error`]. No call unwinds across the boundary.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use libc::{c_char, size_t};

use epicalib::abc::{point_estimate, run_lfmcmc, AbcConfig, AbcTheta};
use epicalib::abm::{simulate, EpiCurve, EpiParams};
use epicalib::error::Error;
use epicalib::ml::{Observation, TrainedModel};

/// Result codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpicalibStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A parameter value was out of range.
    InvalidParam = 2,
    /// Filesystem failure.
    Io = 3,
    /// A file exists but does not match the expected format.
    Schema = 4,
    /// A numeric computation failed.
    Numeric = 5,
    /// Array dimensions did not line up.
    ShapeMismatch = 6,
    /// An internal invariant was violated.
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> EpicalibStatus {
    match err {
        Error::InvalidParam(_) => EpicalibStatus::InvalidParam,
        Error::Io { .. } => EpicalibStatus::Io,
        Error::Schema { .. } => EpicalibStatus::Schema,
        Error::Numeric(_) => EpicalibStatus::Numeric,
        Error::ShapeMismatch(_) => EpicalibStatus::ShapeMismatch,
    }
}

fn fail(err: &Error) -> EpicalibStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

/// Runs a body with panic containment.
fn guarded(body: impl FnOnce() -> EpicalibStatus) -> EpicalibStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            EpicalibStatus::Panic
        }
    }
}

/// Copies the last error message for this thread into `buf` (NUL
/// terminated, truncated to `cap`). Returns the full message length in
/// bytes, excluding the terminator; call with `cap = 0` to query the size.
#[no_mangle]
pub extern "C" fn epicalib_last_error(buf: *mut c_char, cap: size_t) -> size_t {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                *buf.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn epicalib_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parameters of one forward simulation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EpicalibSimSpec {
    /// Population size.
    pub n: u32,
    /// Initially infected agents.
    pub i0: u32,
    /// Expected contacts per infectious agent per day.
    pub c_rate: f64,
    /// Per-contact transmission probability in [0,1].
    pub p_tran: f64,
    /// Per-day recovery probability in (0,1].
    pub p_recov: f64,
    /// Days to simulate.
    pub horizon: u32,
    /// Seed; identical specs reproduce identical curves.
    pub seed: u64,
}

/// Simulates an epidemic and writes `spec->horizon` daily new-infection
/// counts into `out_incidence` (day 0 holds the seed cases).
#[no_mangle]
pub extern "C" fn epicalib_simulate(
    spec: *const EpicalibSimSpec,
    out_incidence: *mut u32,
) -> EpicalibStatus {
    guarded(|| {
        if spec.is_null() || out_incidence.is_null() {
            set_last_error("null pointer argument");
            return EpicalibStatus::NullPointer;
        }
        let spec = unsafe { &*spec };
        let r0 = if spec.p_recov > 0.0 {
            spec.p_tran * spec.c_rate / spec.p_recov
        } else {
            0.0 // placeholder; validation rejects the p_recov below
        };
        let params = match EpiParams::new(spec.n, spec.i0, spec.c_rate, spec.p_tran, spec.p_recov, r0)
        {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match simulate(&params, spec.horizon as usize, spec.seed) {
            Ok(curve) => {
                let out = unsafe {
                    std::slice::from_raw_parts_mut(out_incidence, spec.horizon as usize)
                };
                out.copy_from_slice(curve.incidence());
                EpicalibStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

fn curve_from_doubles(values: &[f64]) -> Result<EpiCurve, Error> {
    let mut incidence = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 || v.fract() != 0.0 || v > f64::from(u32::MAX) {
            return Err(Error::InvalidParam(format!(
                "incidence[{i}] = {v} is not a non-negative integer count"
            )));
        }
        incidence.push(v as u32);
    }
    EpiCurve::new(incidence)
}

/// Opaque handle to a trained calibration model.
pub struct EpicalibModel {
    inner: TrainedModel,
}

/// Loads a trained model from its JSON file. Returns null on failure (see
/// [`epicalib_last_error`]); release with [`epicalib_model_free`].
#[no_mangle]
pub extern "C" fn epicalib_model_load(path: *const c_char) -> *mut EpicalibModel {
    let result = catch_unwind(AssertUnwindSafe(|| {
        if path.is_null() {
            set_last_error("null path");
            return std::ptr::null_mut();
        }
        let path_str = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_last_error("path is not valid UTF-8");
                return std::ptr::null_mut();
            }
        };
        match TrainedModel::load_json(Path::new(path_str)) {
            Ok(inner) => Box::into_raw(Box::new(EpicalibModel { inner })),
            Err(e) => {
                set_last_error(&e.to_string());
                std::ptr::null_mut()
            }
        }
    }));
    match result {
        Ok(ptr) => ptr,
        Err(_) => {
            set_last_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Releases a model handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn epicalib_model_free(model: *mut EpicalibModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Sequence length the model was trained for.
#[no_mangle]
pub extern "C" fn epicalib_model_horizon(model: *const EpicalibModel) -> u32 {
    if model.is_null() {
        return 0;
    }
    unsafe { &*model }.inner.horizon as u32
}

/// Calibrates an observed curve with one forward pass. `incidence` holds
/// `len` daily counts (integral values); shorter-than-horizon curves are
/// padded and masked. Writes `{p_tran, c_rate, r0}` into `out_theta[3]`.
#[no_mangle]
pub extern "C" fn epicalib_model_predict(
    model: *const EpicalibModel,
    incidence: *const f64,
    len: size_t,
    n: u32,
    p_recov: f64,
    out_theta: *mut f64,
) -> EpicalibStatus {
    guarded(|| {
        if model.is_null() || incidence.is_null() || out_theta.is_null() {
            set_last_error("null pointer argument");
            return EpicalibStatus::NullPointer;
        }
        let model = unsafe { &*model };
        let values = unsafe { std::slice::from_raw_parts(incidence, len) };
        let curve = match curve_from_doubles(values) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        match model.inner.predict(&Observation {
            curve: &curve,
            n,
            p_recov,
        }) {
            Ok(theta) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out_theta, 3) };
                out[0] = theta.p_tran;
                out[1] = theta.c_rate;
                out[2] = theta.r0;
                EpicalibStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Settings for one likelihood-free MCMC calibration run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EpicalibAbcSpec {
    /// Population size held fixed during calibration.
    pub n: u32,
    /// Initial infected count held fixed during calibration.
    pub i0: u32,
    /// Chain length.
    pub iterations: u64,
    /// Iterations discarded before the point estimate.
    pub burn_in: u64,
    /// Proposal perturbation scale.
    pub proposal_sigma: f64,
    /// Kernel bandwidth factor of the observed series norm.
    pub kernel_scale: f64,
    /// Chain start (contact rate, recovery probability, transmission
    /// probability).
    pub init_c_rate: f64,
    pub init_p_recov: f64,
    pub init_p_tran: f64,
    /// Seed; identical inputs reproduce identical estimates.
    pub seed: u64,
}

/// Runs the ABC chain against `observed` (`len` integral daily counts) and
/// writes the posterior-median point estimate
/// `{c_rate, p_recov, p_tran, r0}` into `out_estimate[4]`.
#[no_mangle]
pub extern "C" fn epicalib_abc_calibrate(
    observed: *const f64,
    len: size_t,
    spec: *const EpicalibAbcSpec,
    out_estimate: *mut f64,
) -> EpicalibStatus {
    guarded(|| {
        if observed.is_null() || spec.is_null() || out_estimate.is_null() {
            set_last_error("null pointer argument");
            return EpicalibStatus::NullPointer;
        }
        let spec = unsafe { &*spec };
        let values = unsafe { std::slice::from_raw_parts(observed, len) };
        let curve = match curve_from_doubles(values) {
            Ok(c) => c,
            Err(e) => return fail(&e),
        };
        let cfg = AbcConfig {
            iterations: spec.iterations as usize,
            burn_in: spec.burn_in as usize,
            proposal_sigma: spec.proposal_sigma,
            kernel_scale: spec.kernel_scale,
            n: spec.n,
            i0: spec.i0,
            init: AbcTheta {
                c_rate: spec.init_c_rate,
                p_recov: spec.init_p_recov,
                p_tran: spec.init_p_tran,
            },
            seed: spec.seed,
        };
        let trace = match run_lfmcmc(&curve, &cfg) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        match point_estimate(&trace, cfg.burn_in) {
            Ok(est) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out_estimate, 4) };
                out[0] = est.c_rate;
                out[1] = est.p_recov;
                out[2] = est.p_tran;
                out[3] = est.r0;
                EpicalibStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}
