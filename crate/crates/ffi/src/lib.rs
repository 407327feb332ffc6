//! C ABI over the `noarb` engine.
//!
//! Models and reports are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`NoarbStatus`]; on failure a message is available from
//! [`noarb_last_error`] on the same thread. Strings returned through `out`
//! parameters are released with [`noarb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use noarb::modelfile::{parse_model_file, LoadedModel};
use noarb::report::{analyze, render_simulation, render_text, ClassificationReport};
use noarb::scale::ScaleOptions;
use noarb::sim::{simulate_with_sensitivity, SimConfig};
use noarb::Truth;

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoarbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The model text or file could not be read or parsed.
    ParseError = 3,
    /// The model was rejected by the existence gate or the tilt check.
    ModelRejected = 4,
    /// The requested name or argument is not recognised.
    InvalidArgument = 5,
    /// The simulation could not run.
    SimulationError = 6,
    /// A report could not be serialized.
    SerializeError = 7,
    /// An internal error; the handle arguments are left untouched.
    Panic = 8,
}

/// Three-valued verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoarbTruth {
    Fails = 0,
    Holds = 1,
    Unknown = 2,
}

impl From<Truth> for NoarbTruth {
    fn from(t: Truth) -> Self {
        match t {
            Truth::Holds => NoarbTruth::Holds,
            Truth::Fails => NoarbTruth::Fails,
            Truth::Unknown => NoarbTruth::Unknown,
        }
    }
}

/// Opaque model handle.
pub struct NoarbModel {
    loaded: LoadedModel,
}

/// Opaque report handle.
pub struct NoarbReport {
    report: ClassificationReport,
}

/// Simulation settings. `boundary_eps <= 0` selects the default, and
/// `threads == 0` uses every core.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NoarbSimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub boundary_eps: f64,
    pub z_level: f64,
    pub threads: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: NoarbStatus, msg: impl Into<String>) -> NoarbStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> NoarbStatus) -> NoarbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == NoarbStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".into());
            fail(NoarbStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, NoarbStatus> {
    if s.is_null() {
        return Err(fail(NoarbStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(NoarbStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn write_string(out: *mut *mut c_char, s: String) -> NoarbStatus {
    let mut bytes = s.into_bytes();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("interior NULs removed");
    // SAFETY: callers check `out` for null before building the string.
    unsafe { *out = c.into_raw() };
    NoarbStatus::Ok
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(NoarbStatus::NullArgument, concat!(stringify!($p), " is null"));
        })+
    };
}

/// Parses and validates model text, telling syntax errors from rejected
/// models.
fn load_text(text: &str, name: &str) -> Result<LoadedModel, NoarbStatus> {
    let file = parse_model_file(text, name).map_err(|e| fail(NoarbStatus::ParseError, e.to_string()))?;
    file.load(name).map_err(|e| {
        let status = if e.message.contains("cannot parse") {
            NoarbStatus::ParseError
        } else {
            NoarbStatus::ModelRejected
        };
        fail(status, e.to_string())
    })
}

/// Parses a model from the text of a model file.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_model_from_text(text: *const c_char, out: *mut *mut NoarbModel) -> NoarbStatus {
    guard(|| {
        non_null!(out);
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match load_text(text, "<text>") {
            Ok(loaded) => {
                *out = Box::into_raw(Box::new(NoarbModel { loaded }));
                NoarbStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Reads and parses a model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_model_from_file(path: *const c_char, out: *mut *mut NoarbModel) -> NoarbStatus {
    guard(|| {
        non_null!(out);
        let path = match read_str(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(Path::new(path)) {
            Ok(t) => t,
            Err(e) => return fail(NoarbStatus::ParseError, format!("{path}: cannot read: {e}")),
        };
        match load_text(&text, path) {
            Ok(loaded) => {
                *out = Box::into_raw(Box::new(NoarbModel { loaded }));
                NoarbStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from `noarb_model_from_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noarb_model_free(model: *mut NoarbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classifies a model. `anchor` is the scale anchor, or NaN for `x0`;
/// a nonzero `numeric_only` skips the symbolic asymptotics.
///
/// # Safety
/// `model` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_analyze(
    model: *const NoarbModel,
    anchor: f64,
    numeric_only: c_int,
    out: *mut *mut NoarbReport,
) -> NoarbStatus {
    guard(|| {
        non_null!(model, out);
        let opts = ScaleOptions {
            anchor: (!anchor.is_nan()).then_some(anchor),
            symbolic: numeric_only == 0,
            ..Default::default()
        };
        match analyze(&(*model).loaded, &opts) {
            Ok(report) => {
                *out = Box::into_raw(Box::new(NoarbReport { report }));
                NoarbStatus::Ok
            }
            Err(e) => fail(NoarbStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must be null or a handle from `noarb_analyze` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_free(report: *mut NoarbReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Looks up a headline verdict by name, e.g. `nflvr_finite_t`,
/// `nra_finite_t` or `z_martingale`.
///
/// # Safety
/// `report` must be a live report handle, `name` a NUL-terminated string
/// and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_verdict(
    report: *const NoarbReport,
    name: *const c_char,
    out: *mut NoarbTruth,
) -> NoarbStatus {
    guard(|| {
        non_null!(report, out);
        let name = match read_str(name, "name") {
            Ok(n) => n,
            Err(s) => return s,
        };
        let r = &(*report).report;
        match r.consumed().into_iter().find(|(n, _)| *n == name) {
            Some((_, v)) => {
                *out = v.value.into();
                NoarbStatus::Ok
            }
            None => {
                let known: Vec<_> = r.consumed().iter().map(|(n, _)| *n).collect();
                fail(
                    NoarbStatus::InvalidArgument,
                    format!("unknown verdict '{name}' (expected one of {})", known.join(", ")),
                )
            }
        }
    })
}

/// 1 when some headline verdict is Unknown, 0 otherwise, -1 on a null
/// handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_has_unknown(report: *const NoarbReport) -> c_int {
    if report.is_null() {
        set_error("report is null");
        return -1;
    }
    (*report).report.has_unknown() as c_int
}

/// Number of failed simulation cross-checks; 0 when none were run, -1 on
/// a null handle.
///
/// # Safety
/// `report` must be null or a live report handle.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_flag_count(report: *const NoarbReport) -> c_int {
    if report.is_null() {
        set_error("report is null");
        return -1;
    }
    (*report).report.flags().len() as c_int
}

/// Serializes the report as JSON.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_to_json(report: *const NoarbReport, out: *mut *mut c_char) -> NoarbStatus {
    guard(|| {
        non_null!(report, out);
        match serde_json::to_string_pretty(&(*report).report) {
            Ok(s) => write_string(out, s),
            Err(e) => fail(NoarbStatus::SerializeError, e.to_string()),
        }
    })
}

/// Renders the report as text, including the simulation section when one
/// is attached.
///
/// # Safety
/// `report` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_report_to_text(report: *const NoarbReport, out: *mut *mut c_char) -> NoarbStatus {
    guard(|| {
        non_null!(report, out);
        let r = &(*report).report;
        let mut text = render_text(r);
        if let Some(s) = &r.simulation {
            text.push('\n');
            text.push_str(&render_simulation(s));
        }
        write_string(out, text)
    })
}

/// Simulates `model` and attaches the estimates and cross-checks to
/// `report`, which must come from the same model.
///
/// # Safety
/// `model` and `report` must be live handles and `config` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn noarb_simulate(
    model: *const NoarbModel,
    config: *const NoarbSimConfig,
    report: *mut NoarbReport,
) -> NoarbStatus {
    guard(|| {
        non_null!(model, config, report);
        let c = *config;
        if !(c.z_level > 0.0) {
            return fail(
                NoarbStatus::InvalidArgument,
                format!("z_level must be positive, got {}", c.z_level),
            );
        }
        let loaded = &(*model).loaded;
        let sim_config = SimConfig {
            boundary_eps: (c.boundary_eps > 0.0).then_some(c.boundary_eps),
            ..SimConfig::new(c.n_paths, c.dt, c.horizon, c.seed)
        };
        let run = || simulate_with_sensitivity(&loaded.model, &loaded.tilt, &sim_config);
        let result = if c.threads > 0 {
            match rayon::ThreadPoolBuilder::new().num_threads(c.threads).build() {
                Ok(pool) => pool.install(run),
                Err(e) => return fail(NoarbStatus::SimulationError, e.to_string()),
            }
        } else {
            run()
        };
        match result {
            Ok(sim) => {
                (*report).report.attach_simulation(sim, c.z_level);
                NoarbStatus::Ok
            }
            Err(e) => fail(NoarbStatus::SimulationError, e.to_string()),
        }
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn noarb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn noarb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn noarb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
