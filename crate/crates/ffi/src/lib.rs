//! C ABI over the core library.
//!
//! Every fallible call returns a [`StodomStatus`]; on failure the message is
//! available from [`stodom_last_error`] on the same thread. Handles are
//! opaque, owned by the caller and released with the matching `_free`.
//! Strings returned through `char **out` are released with [`stodom_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stodom::lift::FibreMap;
use stodom::percolation::{Graph, Mode};
use stodom::{Coupling, Error, FiniteMeasure};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StodomStatus {
    Ok = 0,
    InvalidInput = 1,
    SizeLimit = 2,
    Precondition = 3,
    AssumptionFailed = 4,
    NoLift = 5,
    FixtureRegression = 6,
    Internal = 7,
    NullPointer = 8,
    Utf8 = 9,
    Panic = 10,
}

/// A probability measure on `[N]^sites`.
pub struct StodomMeasure(FiniteMeasure);

/// A fibre map `A → B` with an optional distinguished section.
pub struct StodomFibreMap(FibreMap);

/// A coupling of two measures.
pub struct StodomCoupling(Coupling);

/// A simple undirected graph.
pub struct StodomGraph(Graph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn status_of(e: &Error) -> StodomStatus {
    match e {
        Error::Input(_) | Error::Json(_) | Error::Io(_) | Error::NullConditioning => StodomStatus::InvalidInput,
        Error::Size { .. } => StodomStatus::SizeLimit,
        Error::Precondition(_) => StodomStatus::Precondition,
        Error::Assumption { .. } => StodomStatus::AssumptionFailed,
        Error::Lift { .. } => StodomStatus::NoLift,
        Error::Fixture(_) => StodomStatus::FixtureRegression,
        Error::Internal(_) => StodomStatus::Internal,
    }
}

struct Fail(StodomStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StodomStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            StodomStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside the library");
            StodomStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(Fail(StodomStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Fail(StodomStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Fail> {
    h.as_ref().ok_or_else(|| Fail(StodomStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(StodomStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail(StodomStatus::Internal, "string contains NUL".into()))
}

/// Last error message on this thread, or null. Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn stodom_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn stodom_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"sites": n, "label_bound": N, "weights": {"0,1": "1/2", ...}}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_measure_from_json(json: *const c_char, out: *mut *mut StodomMeasure) -> StodomStatus {
    guard(|| {
        let m = FiniteMeasure::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(StodomMeasure(m))))
    })
}

/// # Safety
/// `m` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_measure_free(m: *mut StodomMeasure) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_measure_to_json(m: *const StodomMeasure, out: *mut *mut c_char) -> StodomStatus {
    guard(|| put(out, owned_string(handle(m, "measure")?.0.to_json())?))
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_measure_sites(m: *const StodomMeasure, out: *mut usize) -> StodomStatus {
    guard(|| put(out, handle(m, "measure")?.0.sites()))
}

/// Parses `{"A": n, "B": m, "pi": [...], "section": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_fibre_map_from_json(json: *const c_char, out: *mut *mut StodomFibreMap) -> StodomStatus {
    guard(|| {
        let pm = FibreMap::from_json(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(StodomFibreMap(pm))))
    })
}

/// # Safety
/// `pm` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_fibre_map_free(pm: *mut StodomFibreMap) {
    if !pm.is_null() {
        drop(Box::from_raw(pm));
    }
}

/// Writes whether `mu` is stochastically dominated by `rho`. When it is and
/// `coupling` is non-null, a monotone coupling is returned there.
///
/// # Safety
/// Handles must be live; `out` must be writable; `coupling` may be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_dominates(
    mu: *const StodomMeasure,
    rho: *const StodomMeasure,
    out: *mut bool,
    coupling: *mut *mut StodomCoupling,
) -> StodomStatus {
    guard(|| {
        let d = stodom::dominates(&handle(mu, "mu")?.0, &handle(rho, "rho")?.0)?;
        put(out, d.holds())?;
        if !coupling.is_null() {
            let c = d.coupling().map_or(ptr::null_mut(), |c| Box::into_raw(Box::new(StodomCoupling(c))));
            coupling.write(c);
        }
        Ok(())
    })
}

/// The constructive coupling of a lift `mu` below `rho` under the column assumptions.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_main_coupling(
    mu: *const StodomMeasure,
    rho: *const StodomMeasure,
    pm: *const StodomFibreMap,
    out: *mut *mut StodomCoupling,
) -> StodomStatus {
    guard(|| {
        let c = stodom::lift::build_main_coupling(&handle(mu, "mu")?.0, &handle(rho, "rho")?.0, &handle(pm, "fibre map")?.0)?;
        put(out, Box::into_raw(Box::new(StodomCoupling(c))))
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_coupling_is_monotone(
    c: *const StodomCoupling,
    mu: *const StodomMeasure,
    rho: *const StodomMeasure,
    out: *mut bool,
) -> StodomStatus {
    guard(|| put(out, stodom::is_monotone_coupling(&handle(c, "coupling")?.0, &handle(mu, "mu")?.0, &handle(rho, "rho")?.0)))
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_coupling_to_json(c: *const StodomCoupling, out: *mut *mut c_char) -> StodomStatus {
    guard(|| put(out, owned_string(handle(c, "coupling")?.0.to_json())?))
}

/// # Safety
/// `c` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_coupling_free(c: *mut StodomCoupling) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Parses `"V E"` followed by one `"u v"` line per edge.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_graph_parse(source: *const c_char, out: *mut *mut StodomGraph) -> StodomStatus {
    guard(|| {
        let g = Graph::parse(text(source, "graph text")?)?;
        put(out, Box::into_raw(Box::new(StodomGraph(g))))
    })
}

/// # Safety
/// `g` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn stodom_graph_free(g: *mut StodomGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Exact probability that the open cluster of `probe` reaches graph
/// distance `radius`, as a reduced fraction string. `site` selects site
/// percolation, otherwise bond.
///
/// # Safety
/// `g` must be a live handle, `p` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_reach_exact(
    g: *const StodomGraph,
    site: bool,
    p: *const c_char,
    probe: usize,
    radius: usize,
    out: *mut *mut c_char,
) -> StodomStatus {
    guard(|| {
        let p = stodom::rational::parse_probability(text(p, "p")?)?;
        let mode = if site { Mode::Site } else { Mode::Bond };
        let cap = stodom::percolation::DEFAULT_EXACT_CAP;
        let r = stodom::percolation::reach_exact(&handle(g, "graph")?.0, mode, &p, probe, radius, cap)?;
        put(out, owned_string(stodom::rational::format(&r))?)
    })
}

/// Runs a command-line invocation (without the program name) and returns its
/// standard output and exit code.
///
/// # Safety
/// `argv` must point to `argc` NUL-terminated strings; `out` and `code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stodom_cli_run(
    argv: *const *const c_char,
    argc: usize,
    out: *mut *mut c_char,
    code: *mut i32,
) -> StodomStatus {
    guard(|| {
        if argv.is_null() && argc > 0 {
            return Err(Fail(StodomStatus::NullPointer, "argv is null".into()));
        }
        let mut args = vec!["stodom".to_string()];
        for i in 0..argc {
            args.push(text(*argv.add(i), "argument")?.to_string());
        }
        let o = stodom::cli::run(args);
        if !o.stderr.is_empty() {
            set_error(o.stderr.trim_end());
        }
        put(code, o.code)?;
        put(out, owned_string(o.stdout)?)
    })
}
