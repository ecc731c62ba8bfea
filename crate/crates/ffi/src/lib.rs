//! C ABI for edrsim.
//!
//! Every fallible function returns an [`EdrStatus`] and writes results
//! through out-pointers. On failure, [`edr_last_error_message`] returns a
//! description that stays valid until the next failing call on the same
//! thread. Handles are opaque and released with their `_free` function;
//! passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use edrsim::beamline::{self, Counting, ImperfectionModel, MonteCarloSettings};
use edrsim::config::{parse_config, RunConfig};
use edrsim::output::{self, Format};
use edrsim::spin::SpinConfig;
use edrsim::sweep::{self, Preset, SweepRow};
use edrsim::{threestate, Error, SpinState, UncertaintyReport, UnitAxis};

pub const EDR_FORMAT_CSV: u32 = 0;
pub const EDR_FORMAT_JSON: u32 = 1;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NegativeRadicand = 3,
    ZeroCounts = 4,
    Config = 5,
    Io = 6,
    EmptyResults = 7,
    Panic = 8,
}

/// Cartesian 3-vector; axes must have unit length to within 1e-9.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdrVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdrReport {
    pub eps: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub robertson_bound: f64,
    pub schroedinger_extra: f64,
    pub schroedinger_bound: f64,
    pub commutator_bound: f64,
    pub heisenberg_lhs: f64,
    pub ozawa_lhs: f64,
    pub combined_lhs: f64,
    pub heisenberg_ok: bool,
    pub ozawa_ok: bool,
    pub combined_ok: bool,
}

/// Monte Carlo settings; `jitter` is the angle standard deviation in radians.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdrMonteCarlo {
    pub counts_per_setting: f64,
    pub replicates: u32,
    pub efficiency: f64,
    pub jitter: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdrEstimate {
    pub eps: f64,
    pub eps_sd: f64,
    pub eta: f64,
    pub eta_sd: f64,
    pub sigma_a: f64,
    pub sigma_a_sd: f64,
    pub sigma_b: f64,
    pub sigma_b_sd: f64,
    pub eps_failures: u32,
    pub eta_failures: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdrRow {
    pub phi: f64,
    pub theta: f64,
    pub exact: EdrReport,
    pub has_estimate: bool,
    pub estimate: EdrEstimate,
    /// `p_{++}, p_{+-}, p_{-+}, p_{--}`
    pub ports: [f64; 4],
}

/// Observables, state and apparatus axis of a spin configuration.
pub struct EdrSpinConfig {
    inner: SpinConfig,
}

/// Parsed scenario.
pub struct EdrScenario {
    inner: RunConfig,
}

/// Rows of an evaluated scenario.
pub struct EdrRows {
    inner: Vec<SweepRow>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: EdrStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NegativeRadicand { .. } => EdrStatus::NegativeRadicand,
            Error::ZeroCounts => EdrStatus::ZeroCounts,
            Error::Config { .. } => EdrStatus::Config,
            Error::EmptyResults => EdrStatus::EmptyResults,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => EdrStatus::Io,
            _ => EdrStatus::InvalidArgument,
        };
        Failure { status, message: e.to_string() }
    }
}

fn failure(status: EdrStatus, message: impl Into<String>) -> Failure {
    Failure { status, message: message.into() }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EdrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EdrStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EdrStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(failure(EdrStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

fn axis(v: EdrVec3) -> Result<UnitAxis, Failure> {
    Ok(UnitAxis::new(v.x, v.y, v.z)?)
}

fn report(r: &UncertaintyReport) -> EdrReport {
    EdrReport {
        eps: r.eps,
        eta: r.eta,
        sigma_a: r.sigma_a,
        sigma_b: r.sigma_b,
        robertson_bound: r.robertson_bound,
        schroedinger_extra: r.schroedinger_extra,
        schroedinger_bound: r.schroedinger_bound,
        commutator_bound: r.commutator_bound,
        heisenberg_lhs: r.heisenberg_lhs,
        ozawa_lhs: r.ozawa_lhs,
        combined_lhs: r.combined_lhs,
        heisenberg_ok: r.heisenberg_ok,
        ozawa_ok: r.ozawa_ok,
        combined_ok: r.combined_ok,
    }
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| failure(EdrStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Message of the last failure on this thread, or NULL.
#[no_mangle]
pub extern "C" fn edr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn edr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a configuration from unit vectors for `A`, `B`, the Bloch
/// direction of `ψ` and the apparatus axis `o_a`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_new(
    a: EdrVec3,
    b: EdrVec3,
    psi: EdrVec3,
    o_a: EdrVec3,
    out: *mut *mut EdrSpinConfig,
) -> EdrStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = SpinConfig {
            a: axis(a)?,
            b: axis(b)?,
            psi: SpinState::eigenstate(&axis(psi)?),
            o_a: axis(o_a)?,
        };
        *out = Box::into_raw(Box::new(EdrSpinConfig { inner }));
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from `edr_spin_config_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_free(cfg: *mut EdrSpinConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Replaces the apparatus axis.
///
/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_set_apparatus(
    cfg: *mut EdrSpinConfig,
    o_a: EdrVec3,
) -> EdrStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        (*cfg).inner.o_a = axis(o_a)?;
        Ok(())
    })
}

/// Exact error, disturbance and all relation terms.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_report(
    cfg: *const EdrSpinConfig,
    out: *mut EdrReport,
) -> EdrStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(out, "out")?;
        *out = report(&(*cfg).inner.report());
        Ok(())
    })
}

/// Three-state reconstruction from exact expectation values.
///
/// # Safety
/// `cfg` must be a live handle; `eps` and `eta` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_three_state(
    cfg: *const EdrSpinConfig,
    eps: *mut f64,
    eta: *mut f64,
) -> EdrStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(eps, "eps")?;
        non_null(eta, "eta")?;
        let (e, n) = threestate::exact_spin_estimates(&(*cfg).inner)?;
        *eps = e;
        *eta = n;
        Ok(())
    })
}

/// Simulated counting experiment with replicate error bars.
///
/// # Safety
/// `cfg` must be a live handle, `settings` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn edr_spin_config_simulate(
    cfg: *const EdrSpinConfig,
    settings: *const EdrMonteCarlo,
    seed: u64,
    out: *mut EdrEstimate,
) -> EdrStatus {
    guard(|| {
        non_null(cfg, "cfg")?;
        non_null(settings, "settings")?;
        non_null(out, "out")?;
        let s = *settings;
        if !(s.counts_per_setting > 0.0 && s.counts_per_setting.is_finite()) {
            return Err(failure(EdrStatus::InvalidArgument, "counts_per_setting must be positive"));
        }
        let mc = MonteCarloSettings {
            counting: Counting::per_setting(s.counts_per_setting),
            replicates: s.replicates as usize,
            imperfections: ImperfectionModel::new(s.efficiency, s.jitter, seed)?,
        };
        let est = beamline::run_with_error_bars(&(*cfg).inner, &mc, seed)?;
        *out = EdrEstimate {
            eps: est.eps.mean,
            eps_sd: est.eps.sd,
            eta: est.eta.mean,
            eta_sd: est.eta.sd,
            sigma_a: est.sigma_a.mean,
            sigma_a_sd: est.sigma_a.sd,
            sigma_b: est.sigma_b.mean,
            sigma_b_sd: est.sigma_b.sd,
            eps_failures: est.eps_failures as u32,
            eta_failures: est.eta_failures as u32,
        };
        Ok(())
    })
}

/// Four-port probabilities `p_{++}, p_{+-}, p_{-+}, p_{--}`.
///
/// # Safety
/// `out` must be valid for 4 writes.
#[no_mangle]
pub unsafe extern "C" fn edr_port_probabilities(
    psi: EdrVec3,
    o_a: EdrVec3,
    b: EdrVec3,
    out: *mut f64,
) -> EdrStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = beamline::port_probabilities(&SpinState::eigenstate(&axis(psi)?), &axis(o_a)?, &axis(b)?);
        ptr::copy_nonoverlapping(p.as_array().as_ptr(), out, 4);
        Ok(())
    })
}

/// Polar angle of `o_a` below which `εη` stays above the bound for every
/// azimuth, bisected on `[lo, hi]` to `tol`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_violation_threshold(
    a: EdrVec3,
    b: EdrVec3,
    psi: EdrVec3,
    lo: f64,
    hi: f64,
    tol: f64,
    out: *mut f64,
) -> EdrStatus {
    guard(|| {
        non_null(out, "out")?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(failure(EdrStatus::InvalidArgument, "tol must be positive"));
        }
        *out = sweep::violation_threshold(
            &axis(a)?,
            &axis(b)?,
            &SpinState::eigenstate(&axis(psi)?),
            lo,
            hi,
            tol,
            sweep::DEFAULT_VIOLATION_RESOLUTION,
        )?;
        Ok(())
    })
}

/// Parses a TOML scenario.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_parse(
    text: *const c_char,
    out: *mut *mut EdrScenario,
) -> EdrStatus {
    guard(|| {
        non_null(out, "out")?;
        let inner = parse_config(c_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(EdrScenario { inner }));
        Ok(())
    })
}

/// Scenario from a preset name such as `"standard"` or `"phiB"`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_from_preset(
    name: *const c_char,
    out: *mut *mut EdrScenario,
) -> EdrStatus {
    guard(|| {
        non_null(out, "out")?;
        let preset: Preset = c_str(name, "name")?.parse()?;
        *out = Box::into_raw(Box::new(EdrScenario { inner: RunConfig::from_preset(preset) }));
        Ok(())
    })
}

/// # Safety
/// `sc` must be NULL or a live scenario handle.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_free(sc: *mut EdrScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_set_seed(sc: *mut EdrScenario, seed: u64) -> EdrStatus {
    guard(|| {
        non_null(sc, "sc")?;
        (*sc).inner.set_seed(seed);
        Ok(())
    })
}

/// # Safety
/// `sc` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_set_samples(sc: *mut EdrScenario, samples: usize) -> EdrStatus {
    guard(|| {
        non_null(sc, "sc")?;
        (*sc).inner.set_samples(samples)?;
        Ok(())
    })
}

/// Evaluates every point of the scenario's path.
///
/// # Safety
/// `sc` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_scenario_run(
    sc: *const EdrScenario,
    out: *mut *mut EdrRows,
) -> EdrStatus {
    guard(|| {
        non_null(sc, "sc")?;
        non_null(out, "out")?;
        let inner = sweep::run_scenario(&(*sc).inner.scenario)?;
        *out = Box::into_raw(Box::new(EdrRows { inner }));
        Ok(())
    })
}

/// # Safety
/// `rows` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edr_rows_free(rows: *mut EdrRows) {
    if !rows.is_null() {
        drop(Box::from_raw(rows));
    }
}

/// Number of rows; 0 for NULL.
///
/// # Safety
/// `rows` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn edr_rows_len(rows: *const EdrRows) -> usize {
    if rows.is_null() {
        0
    } else {
        (*rows).inner.len()
    }
}

/// # Safety
/// `rows` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn edr_rows_get(
    rows: *const EdrRows,
    index: usize,
    out: *mut EdrRow,
) -> EdrStatus {
    guard(|| {
        non_null(rows, "rows")?;
        non_null(out, "out")?;
        let list = &(*rows).inner;
        let r = list.get(index).ok_or_else(|| {
            failure(EdrStatus::InvalidArgument, format!("row {index} out of range 0..{}", list.len()))
        })?;
        let estimate = r.estimate.map_or(EdrEstimate::default(), |e| EdrEstimate {
            eps: e.eps,
            eps_sd: e.eps_sd,
            eta: e.eta,
            eta_sd: e.eta_sd,
            sigma_a: e.sigma_a,
            sigma_a_sd: e.sigma_a_sd,
            sigma_b: e.sigma_b,
            sigma_b_sd: e.sigma_b_sd,
            eps_failures: e.eps_failures as u32,
            eta_failures: e.eta_failures as u32,
        });
        *out = EdrRow {
            phi: r.phi,
            theta: r.theta,
            exact: report(&r.exact),
            has_estimate: r.estimate.is_some(),
            estimate,
            ports: r.ports.as_array(),
        };
        Ok(())
    })
}

/// Writes the rows to `path` as `EDR_FORMAT_CSV` or `EDR_FORMAT_JSON`.
///
/// # Safety
/// `rows` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn edr_rows_write(
    rows: *const EdrRows,
    path: *const c_char,
    format: u32,
) -> EdrStatus {
    guard(|| {
        non_null(rows, "rows")?;
        let path = c_str(path, "path")?;
        let format = match format {
            EDR_FORMAT_CSV => Format::Csv,
            EDR_FORMAT_JSON => Format::Json,
            other => return Err(failure(EdrStatus::InvalidArgument, format!("unknown format {other}"))),
        };
        output::emit_rows(&(*rows).inner, format, Path::new(path))?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: EdrVec3 = EdrVec3 { x: 1.0, y: 0.0, z: 0.0 };
    const Y: EdrVec3 = EdrVec3 { x: 0.0, y: 1.0, z: 0.0 };
    const Z: EdrVec3 = EdrVec3 { x: 0.0, y: 0.0, z: 1.0 };

    fn last_error() -> String {
        unsafe { CStr::from_ptr(edr_last_error_message()).to_string_lossy().into_owned() }
    }

    #[test]
    fn status_mapping() {
        assert_eq!(Failure::from(Error::ZeroCounts).status, EdrStatus::ZeroCounts);
        assert_eq!(
            Failure::from(Error::Config { line: 2, message: "x".into() }).status,
            EdrStatus::Config
        );
        assert_eq!(Failure::from(Error::InvalidParameter("p".into())).status, EdrStatus::InvalidArgument);
    }

    #[test]
    fn null_out_pointer() {
        let st = unsafe { edr_spin_config_new(X, Y, Z, X, ptr::null_mut()) };
        assert_eq!(st, EdrStatus::NullPointer);
        assert!(last_error().contains("out"));
    }

    #[test]
    fn non_unit_axis_rejected() {
        let mut cfg = ptr::null_mut();
        let bad = EdrVec3 { x: 2.0, y: 0.0, z: 0.0 };
        let st = unsafe { edr_spin_config_new(bad, Y, Z, X, &mut cfg) };
        assert_eq!(st, EdrStatus::InvalidArgument);
        assert!(cfg.is_null());
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), EdrStatus::Panic);
        assert_eq!(last_error(), "internal panic");
    }

    #[test]
    fn version_string() {
        let v = unsafe { CStr::from_ptr(edr_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
