//! C ABI over the `ncgeom` engine.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns an
//! [`NcgStatus`]; on failure the message is available from
//! [`ncg_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ncgeom::report::{Format, Report, Status};
use ncgeom::runner;
use ncgeom::scenario::Scenario;
use ncgeom::Error;

/// Result codes. `NCG_STATUS_OK` is zero.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    /// The engine rejected the input data (shape, invertibility, star product, …).
    Domain = 6,
    /// Two independent computations of one quantity disagreed.
    Internal = 7,
    OutOfRange = 8,
    NotFound = 9,
    Panic = 10,
}

/// Outcome of one check in a report.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcgCheckStatus {
    Pass = 0,
    Fail = 1,
    Skipped = 2,
    ExpectedFail = 3,
    UnexpectedPass = 4,
}

impl From<Status> for NcgCheckStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Pass => NcgCheckStatus::Pass,
            Status::Fail => NcgCheckStatus::Fail,
            Status::Skipped => NcgCheckStatus::Skipped,
            Status::ExpectedFail => NcgCheckStatus::ExpectedFail,
            Status::UnexpectedPass => NcgCheckStatus::UnexpectedPass,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NcgFormat {
    Json = 0,
    Markdown = 1,
}

/// Parsed scenario.
pub struct NcgScenario(Scenario);

/// Finished run report.
pub struct NcgReport(Report);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> NcgStatus {
    match e {
        Error::Parse(_) => NcgStatus::Parse,
        Error::Validation(_) => NcgStatus::Validation,
        Error::Io(_) => NcgStatus::Io,
        Error::InternalDisagreement(_) => NcgStatus::Internal,
        Error::OrderOutOfRange { .. } => NcgStatus::OutOfRange,
        _ => NcgStatus::Domain,
    }
}

struct Failure(NcgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

/// Runs `f` behind a panic guard and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NcgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NcgStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NcgStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(NcgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NcgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(NcgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(NcgStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

/// Message of the last failed call on this thread, or null.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ncg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ncg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_scenario_from_json(json: *const c_char, out: *mut *mut NcgScenario) -> NcgStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let s = Scenario::from_json(text)?;
        write_out(out, Box::into_raw(Box::new(NcgScenario(s))), "out")
    })
}

/// Loads a scenario from a file path or a `builtin:NAME` reference.
///
/// # Safety
/// `source` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_scenario_load(source: *const c_char, out: *mut *mut NcgScenario) -> NcgStatus {
    guard(|| {
        let src = read_str(source, "source")?;
        let s = Scenario::load(src)?;
        write_out(out, Box::into_raw(Box::new(NcgScenario(s))), "out")
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncg_scenario_free(scenario: *mut NcgScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs every check of the scenario.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_run(scenario: *const NcgScenario, out: *mut *mut NcgReport) -> NcgStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let r = runner::run(&s.0)?;
        write_out(out, Box::into_raw(Box::new(NcgReport(r))), "out")
    })
}

/// Checks the sixteen trigonometric product identities.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_verify_appendix(
    order: u32,
    points: u32,
    seed: u64,
    out: *mut *mut NcgReport,
) -> NcgStatus {
    guard(|| {
        let r = runner::appendix_report(order as usize, points as usize, seed)?;
        write_out(out, Box::into_raw(Box::new(NcgReport(r))), "out")
    })
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_free(report: *mut NcgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Process exit code the report maps to: 0 when every check is acceptable, 1 otherwise.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_exit_code(report: *const NcgReport, out: *mut i32) -> NcgStatus {
    guard(|| write_out(out, deref(report, "report")?.0.exit_code(), "out"))
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_check_count(report: *const NcgReport, out: *mut usize) -> NcgStatus {
    guard(|| write_out(out, deref(report, "report")?.0.checks.len(), "out"))
}

fn check_at(report: &NcgReport, index: usize) -> Result<&ncgeom::report::CheckEntry, Failure> {
    report.0.checks.get(index).ok_or_else(|| {
        Failure(
            NcgStatus::OutOfRange,
            format!("check index {index} outside 0..{}", report.0.checks.len()),
        )
    })
}

/// Status of the check at `index`.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_check_status(
    report: *const NcgReport,
    index: usize,
    out: *mut NcgCheckStatus,
) -> NcgStatus {
    guard(|| {
        let c = check_at(deref(report, "report")?, index)?;
        write_out(out, c.status.into(), "out")
    })
}

/// Name of the check at `index`; free with [`ncg_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_check_name(
    report: *const NcgReport,
    index: usize,
    out: *mut *mut c_char,
) -> NcgStatus {
    guard(|| {
        let c = check_at(deref(report, "report")?, index)?;
        write_out(out, owned_string(c.name.clone()), "out")
    })
}

/// Rendered value of a named quantity such as `R¹₁`; free with [`ncg_string_free`].
///
/// # Safety
/// `report` must be a live handle; `name` nul-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_quantity(
    report: *const NcgReport,
    name: *const c_char,
    out: *mut *mut c_char,
) -> NcgStatus {
    guard(|| {
        let r = deref(report, "report")?;
        let name = read_str(name, "name")?;
        let q = r
            .0
            .quantity(name)
            .ok_or_else(|| Failure(NcgStatus::NotFound, format!("no quantity named {name}")))?;
        write_out(out, owned_string(q.rendered()), "out")
    })
}

/// Whole report as JSON or markdown; free with [`ncg_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ncg_report_render(
    report: *const NcgReport,
    format: NcgFormat,
    out: *mut *mut c_char,
) -> NcgStatus {
    guard(|| {
        let r = deref(report, "report")?;
        let f = match format {
            NcgFormat::Json => Format::Json,
            NcgFormat::Markdown => Format::Markdown,
        };
        write_out(out, owned_string(r.0.render(f)), "out")
    })
}
