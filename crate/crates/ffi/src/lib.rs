//! C ABI over the `it2stc` simulator.
//!
//! Every function returns an [`It2stcStatus`]; results come back through out
//! pointers. On failure a message is available from
//! [`it2stc_last_error_message`] on the same thread. Experiments and runs are
//! opaque handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use it2stc::cli::experiment::{self, RunOutput};
use it2stc::cli::{csv, ExperimentConfig};
use it2stc::it2fls::{km_type_reduce, FiringInterval, IT2GaussianSet};
use it2stc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum It2stcStatus {
    Ok = 0,
    NullPointer = 1,
    /// Invalid configuration or parameter.
    Config = 2,
    /// Simulation diverged, a value went non-finite, or no rule fired.
    Divergence = 3,
    Io = 4,
    OutOfRange = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

/// Opaque experiment configuration.
pub struct It2stcExperiment {
    cfg: ExperimentConfig,
}

/// Opaque result of one simulation.
pub struct It2stcRun {
    out: RunOutput,
}

/// Steady-state metrics. Times are NaN when the band is never entered for good.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct It2stcMetrics {
    pub rmse_e1: f64,
    pub rmse_e2: f64,
    pub tv_u: f64,
    pub settle_time: f64,
    pub s_band_time: f64,
}

/// One recorded step, same fields as a CSV row.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct It2stcSample {
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub x1_meas: f64,
    pub x2_meas: f64,
    pub yd: f64,
    pub yd_dot: f64,
    pub e1: f64,
    pub e2: f64,
    pub s: f64,
    pub u: f64,
    pub norm_thf: f64,
    pub norm_th1: f64,
    pub norm_th2: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> It2stcStatus {
    match e.exit_code() {
        3 => It2stcStatus::Divergence,
        4 => It2stcStatus::Io,
        _ => It2stcStatus::Config,
    }
}

struct Fail(It2stcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(It2stcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> It2stcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            It2stcStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            It2stcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            It2stcStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn mut_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn it2stc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates an experiment from a built-in preset (`duffing-track`, `duffing-free`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_from_preset(
    name: *const c_char,
    out: *mut *mut It2stcExperiment,
) -> It2stcStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::preset(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(It2stcExperiment { cfg }));
        Ok(())
    })
}

/// Creates an experiment from TOML configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_from_toml(
    text: *const c_char,
    out: *mut *mut It2stcExperiment,
) -> It2stcStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let cfg = ExperimentConfig::parse(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(It2stcExperiment { cfg }));
        Ok(())
    })
}

/// # Safety
/// `exp` must come from an `it2stc_experiment_from_*` call.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_set_seed(
    exp: *mut It2stcExperiment,
    seed: u64,
) -> It2stcStatus {
    guard(|| {
        mut_arg(exp, "experiment")?.cfg.noise.seed = seed;
        Ok(())
    })
}

/// Sets the measurement SNR in dB; NaN disables noise.
///
/// # Safety
/// `exp` must come from an `it2stc_experiment_from_*` call.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_set_snr_db(
    exp: *mut It2stcExperiment,
    snr_db: f64,
) -> It2stcStatus {
    guard(|| {
        let exp = mut_arg(exp, "experiment")?;
        let mut cfg = exp.cfg.clone();
        cfg.noise.snr_db = if snr_db.is_nan() { None } else { Some(snr_db) };
        cfg.validate()?;
        exp.cfg = cfg;
        Ok(())
    })
}

/// # Safety
/// `exp` must come from an `it2stc_experiment_from_*` call.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_set_t_end(
    exp: *mut It2stcExperiment,
    t_end: f64,
) -> It2stcStatus {
    guard(|| {
        let exp = mut_arg(exp, "experiment")?;
        let mut cfg = exp.cfg.clone();
        cfg.sim.t_end = t_end;
        cfg.validate()?;
        exp.cfg = cfg;
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or come from an `it2stc_experiment_from_*` call, and
/// must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_free(exp: *mut It2stcExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs the experiment with its configured controller.
///
/// # Safety
/// `exp` must be a live experiment handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_experiment_run(
    exp: *const It2stcExperiment,
    out: *mut *mut It2stcRun,
) -> It2stcStatus {
    guard(|| {
        let out = mut_arg(out, "out")?;
        *out = ptr::null_mut();
        let exp = ref_arg(exp, "experiment")?;
        let run = experiment::run(&exp.cfg)?;
        *out = Box::into_raw(Box::new(It2stcRun { out: run }));
        Ok(())
    })
}

/// # Safety
/// `run` must be a live run handle; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_run_len(run: *const It2stcRun, len: *mut usize) -> It2stcStatus {
    guard(|| {
        *mut_arg(len, "len")? = ref_arg(run, "run")?.out.trajectory.len();
        Ok(())
    })
}

/// # Safety
/// `run` must be a live run handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_run_metrics(
    run: *const It2stcRun,
    out: *mut It2stcMetrics,
) -> It2stcStatus {
    guard(|| {
        let m = ref_arg(run, "run")?.out.metrics;
        *mut_arg(out, "out")? = It2stcMetrics {
            rmse_e1: m.rmse_e1,
            rmse_e2: m.rmse_e2,
            tv_u: m.tv_u,
            settle_time: m.settle_time.unwrap_or(f64::NAN),
            s_band_time: m.s_band_time.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Copies sample `index` of a second-order run.
///
/// # Safety
/// `run` must be a live run handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_run_sample(
    run: *const It2stcRun,
    index: usize,
    out: *mut It2stcSample,
) -> It2stcStatus {
    guard(|| {
        let traj = &ref_arg(run, "run")?.out.trajectory;
        let out = mut_arg(out, "out")?;
        let s = traj.samples.get(index).ok_or_else(|| {
            Fail(
                It2stcStatus::OutOfRange,
                format!("sample {index} out of range (len {})", traj.len()),
            )
        })?;
        if s.x.len() != 2 {
            return Err(Fail(
                It2stcStatus::Config,
                "only second-order runs expose samples".into(),
            ));
        }
        *out = It2stcSample {
            t: s.t,
            x1: s.x[0],
            x2: s.x[1],
            x1_meas: s.x_meas[0],
            x2_meas: s.x_meas[1],
            yd: s.yd,
            yd_dot: s.yd_dot,
            e1: s.e[0],
            e2: s.e[1],
            s: s.s,
            u: s.u,
            norm_thf: s.theta_norms[0],
            norm_th1: s.theta_norms[1],
            norm_th2: s.theta_norms[2],
        };
        Ok(())
    })
}

/// Writes the trajectory as wide CSV.
///
/// # Safety
/// `run` must be a live run handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn it2stc_run_write_csv(
    run: *const It2stcRun,
    path: *const c_char,
) -> It2stcStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let path = Path::new(str_arg(path, "path")?);
        let file = std::fs::File::create(path).map_err(Error::from)?;
        csv::write_wide(std::io::BufWriter::new(file), &run.out.trajectory)?;
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a live run handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn it2stc_run_free(run: *mut It2stcRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Lower and upper membership of `x` in the Gaussian set with uncertain mean
/// `[m1, m2]` and spread `sigma`.
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_mf_bounds(
    m1: f64,
    m2: f64,
    sigma: f64,
    x: f64,
    lower: *mut f64,
    upper: *mut f64,
) -> It2stcStatus {
    guard(|| {
        let lower = mut_arg(lower, "lower")?;
        let upper = mut_arg(upper, "upper")?;
        let (lo, up) = IT2GaussianSet::new(m1, m2, sigma)?.eval_bounds(x)?;
        *lower = lo;
        *upper = up;
        Ok(())
    })
}

/// Karnik-Mendel type reduction of `m` rules with firing intervals
/// `[lo[i], hi[i]]` and crisp consequents `w[i]`.
///
/// # Safety
/// `lo`, `hi` and `w` must point to `m` readable doubles; `y_l` and `y_r`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn it2stc_km_reduce(
    lo: *const f64,
    hi: *const f64,
    w: *const f64,
    m: usize,
    y_l: *mut f64,
    y_r: *mut f64,
) -> It2stcStatus {
    guard(|| {
        if lo.is_null() || hi.is_null() || w.is_null() {
            return Err(null("lo, hi or w"));
        }
        let y_l = mut_arg(y_l, "y_l")?;
        let y_r = mut_arg(y_r, "y_r")?;
        let (lo, hi, w) = if m == 0 {
            (&[][..], &[][..], &[][..])
        } else {
            (
                std::slice::from_raw_parts(lo, m),
                std::slice::from_raw_parts(hi, m),
                std::slice::from_raw_parts(w, m),
            )
        };
        let firings = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| FiringInterval::new(a, b))
            .collect::<Result<Vec<_>, _>>()?;
        let out = km_type_reduce(&firings, w)?;
        *y_l = out.y_l;
        *y_r = out.y_r;
        Ok(())
    })
}
