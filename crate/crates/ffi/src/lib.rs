//! C ABI over `pdeinv`.
//!
//! Every function returns a [`PdeinvStatus`]; on failure the message is
//! available from [`pdeinv_last_error`] on the same thread. Matrices cross
//! the boundary as separate row-major real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use pdeinv::cli::{objective_configs, run_command, Command, Setup};
use pdeinv::config::ExperimentConfig;
use pdeinv::inversion::{invert, objective_and_gradient};
use pdeinv::linalg::{CMat, C64};
use pdeinv::objective::{objective_infty, objective_rho, objective_zero, ObjectiveConfig};
use pdeinv::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeinvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Invalid configuration or arguments, including wrong array lengths.
    Config = 3,
    Numeric = 4,
    Invariant = 5,
    Io = 6,
    BufferTooSmall = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdeinvCommand {
    Synthesize = 0,
    Landscape = 1,
    Invert = 2,
    Direct = 3,
    Gramcheck = 4,
}

/// An experiment: parsed configuration, model, truth and synthesized data.
pub struct PdeinvExperiment {
    config: ExperimentConfig,
    setup: Setup,
    objectives: Vec<ObjectiveConfig>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

struct Failure(PdeinvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Invariant(_) => PdeinvStatus::Invariant,
            Error::Io(_) => PdeinvStatus::Io,
            Error::DimensionMismatch(_) => PdeinvStatus::Config,
            e if e.is_numeric() => PdeinvStatus::Numeric,
            _ => PdeinvStatus::Config,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PdeinvStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PdeinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PdeinvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdeinvStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(PdeinvStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p).to_str().map_err(|_| fail(PdeinvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn read_matrix(n: usize, re: *const f64, im: *const f64, what: &str) -> Result<CMat, Failure> {
    let re = slice(re, n * n, what)?;
    let im = if im.is_null() { None } else { Some(slice(im, n * n, what)?) };
    Ok(CMat::from_fn(n, n, |i, j| C64::new(re[i * n + j], im.map_or(0.0, |v| v[i * n + j]))))
}

unsafe fn experiment<'a>(p: *const PdeinvExperiment) -> Result<&'a PdeinvExperiment, Failure> {
    non_null(p, "experiment")?;
    Ok(&*p)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pdeinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Parse a TOML configuration and synthesize its data.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_new(toml: *const c_char, out: *mut *mut PdeinvExperiment) -> PdeinvStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = std::ptr::null_mut();
        let config = ExperimentConfig::from_toml(read_str(toml, "toml")?)?;
        let setup = Setup::new(&config)?;
        let objectives = objective_configs(&config, &setup)?;
        *out = Box::into_raw(Box::new(PdeinvExperiment { config, setup, objectives }));
        Ok(())
    })
}

/// Release an experiment. Null is ignored.
///
/// # Safety
/// `exp` must come from [`pdeinv_experiment_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_free(exp: *mut PdeinvExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Number of model parameters, sources and configured objectives.
///
/// # Safety
/// `exp` must be a live experiment; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_dims(
    exp: *const PdeinvExperiment,
    n_params: *mut usize,
    n_sources: *mut usize,
    n_objectives: *mut usize,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        if !n_params.is_null() {
            *n_params = e.setup.problem.n_params();
        }
        if !n_sources.is_null() {
            *n_sources = e.setup.measurements.n_sources();
        }
        if !n_objectives.is_null() {
            *n_objectives = e.objectives.len();
        }
        Ok(())
    })
}

/// Copy the true parameters into `out` (`len` must equal the parameter count).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_truth(
    exp: *const PdeinvExperiment,
    out: *mut f64,
    len: usize,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        let t = &e.setup.truth;
        if len < t.len() {
            return Err(fail(PdeinvStatus::BufferTooSmall, format!("need {} entries", t.len())));
        }
        slice_mut(out, t.len(), "out")?.copy_from_slice(t);
        Ok(())
    })
}

/// Copy the measured data (row-major, `n_sources^2` entries each).
///
/// # Safety
/// `re` and `im` must each point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_data(
    exp: *const PdeinvExperiment,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        let d = e.setup.data();
        let n = d.nrows();
        if len < n * n {
            return Err(fail(PdeinvStatus::BufferTooSmall, format!("need {} entries", n * n)));
        }
        let (re, im) = (slice_mut(re, n * n, "re")?, slice_mut(im, n * n, "im")?);
        for i in 0..n {
            for j in 0..n {
                re[i * n + j] = d[(i, j)].re;
                im[i * n + j] = d[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// Objective `objective` at `theta` and its gradient (`grad` may be null).
///
/// # Safety
/// `theta` must hold `n` doubles and `grad`, if not null, `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_objective(
    exp: *const PdeinvExperiment,
    objective: usize,
    theta: *const f64,
    n: usize,
    value: *mut f64,
    grad: *mut f64,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        non_null(value, "value")?;
        let cfg = e.objectives.get(objective).ok_or_else(|| {
            fail(PdeinvStatus::OutOfRange, format!("objective {objective} of {}", e.objectives.len()))
        })?;
        let model =
            e.setup.problem.discrete().ok_or_else(|| fail(PdeinvStatus::Config, "model has no discrete system"))?;
        let theta = slice(theta, n, "theta")?;
        let (v, g) = objective_and_gradient(model, e.setup.data(), cfg, theta)?;
        *value = v;
        if !grad.is_null() {
            slice_mut(grad, n, "grad")?.copy_from_slice(&g);
        }
        Ok(())
    })
}

/// Run L-BFGS for objective `objective` from `theta0`; writes the final
/// parameters to `theta_out` and the relative data misfit to `data_fit`.
///
/// # Safety
/// `theta0` and `theta_out` must hold `n` doubles; `data_fit` may be null.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_invert(
    exp: *const PdeinvExperiment,
    objective: usize,
    theta0: *const f64,
    n: usize,
    theta_out: *mut f64,
    data_fit: *mut f64,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        let cfg = e.objectives.get(objective).ok_or_else(|| {
            fail(PdeinvStatus::OutOfRange, format!("objective {objective} of {}", e.objectives.len()))
        })?;
        let model =
            e.setup.problem.discrete().ok_or_else(|| fail(PdeinvStatus::Config, "model has no discrete system"))?;
        let theta0 = slice(theta0, n, "theta0")?;
        let out = slice_mut(theta_out, n, "theta_out")?;
        let report = invert(model, e.setup.data(), cfg, theta0, &e.config.optimizer)?;
        out.copy_from_slice(&report.final_theta);
        if !data_fit.is_null() {
            *data_fit = report.data_fit;
        }
        Ok(())
    })
}

/// Run a command-line command for this experiment, writing into `out_dir`.
///
/// # Safety
/// `out_dir` must be a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_experiment_run(
    exp: *const PdeinvExperiment,
    command: PdeinvCommand,
    out_dir: *const c_char,
) -> PdeinvStatus {
    guard(|| {
        let e = experiment(exp)?;
        let cfg = ExperimentConfig { output_dir: PathBuf::from(read_str(out_dir, "out_dir")?), ..e.config.clone() };
        let cmd = match command {
            PdeinvCommand::Synthesize => Command::Synthesize,
            PdeinvCommand::Landscape => Command::Landscape,
            PdeinvCommand::Invert => Command::Invert,
            PdeinvCommand::Direct => Command::Direct,
            PdeinvCommand::Gramcheck => Command::Gramcheck,
        };
        run_command(cmd, &cfg)?;
        Ok(())
    })
}

/// Penalty objective `1/2 tr(E* (I + G/rho)^{-1} E)` for `n x n` matrices.
/// `rho = +inf` gives `1/2 |E|^2` and `rho = 0` the limit
/// `1/2 tr(E* G^{-1} E)`. Null imaginary parts are read as zero.
///
/// # Safety
/// Non-null arrays must hold `n * n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn pdeinv_objective(
    n: usize,
    e_re: *const f64,
    e_im: *const f64,
    g_re: *const f64,
    g_im: *const f64,
    rho: f64,
    out: *mut f64,
) -> PdeinvStatus {
    guard(|| {
        non_null(out, "out")?;
        let e = read_matrix(n, e_re, e_im, "E")?;
        *out = if rho.is_infinite() && rho > 0.0 {
            objective_infty(&e)
        } else {
            let g = read_matrix(n, g_re, g_im, "G")?;
            if rho == 0.0 {
                objective_zero(&e, &g)?
            } else if rho > 0.0 && rho.is_finite() {
                objective_rho(&e, &g, rho)?
            } else {
                return Err(fail(PdeinvStatus::Config, format!("invalid penalty {rho}")));
            }
        };
        Ok(())
    })
}
