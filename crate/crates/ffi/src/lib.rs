//! C interface to wrangle sessions.
//!
//! Every function returns a [`WrangleStatus`]. Strings handed out by the
//! library are NUL-terminated, owned by the caller and released with
//! [`wrangle_string_free`]. The message of the most recent failure on the
//! calling thread is available from [`wrangle_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wrangle::protocol::{decode_bindings, encode_choices};
use wrangle::{Error, Session, Settings};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrangleStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    UnknownAssistant = 3,
    MissingBinding = 4,
    Io = 5,
    InvalidConstraint = 6,
    InvalidData = 7,
    /// The interaction set admits no expression.
    Conflict = 8,
    ChoiceOutOfRange = 9,
    StaleChoice = 10,
    SessionAccepted = 11,
    NoRecommendation = 12,
    Protocol = 13,
    Panic = 14,
}

impl From<&Error> for WrangleStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::UnknownAssistant(_) => WrangleStatus::UnknownAssistant,
            Error::MissingBinding(_) => WrangleStatus::MissingBinding,
            Error::Io { .. } | Error::Stream(_) => WrangleStatus::Io,
            Error::InvalidConstraint { .. } => WrangleStatus::InvalidConstraint,
            Error::ConflictingConstraints(_) | Error::Exhausted(_) => WrangleStatus::Conflict,
            Error::EmptyInput(_) | Error::InvalidData(_) => WrangleStatus::InvalidData,
            Error::ChoiceOutOfRange { .. } => WrangleStatus::ChoiceOutOfRange,
            Error::StaleChoice => WrangleStatus::StaleChoice,
            Error::SessionAccepted => WrangleStatus::SessionAccepted,
            Error::NoRecommendation => WrangleStatus::NoRecommendation,
            Error::Protocol(_) => WrangleStatus::Protocol,
        }
    }
}

/// Opaque session handle.
pub struct WrangleSession {
    inner: Session,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: WrangleStatus, msg: impl Into<String>) -> WrangleStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> WrangleStatus) -> WrangleStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(WrangleStatus::Panic, "internal panic"),
    }
}

fn check(r: wrangle::Result<()>) -> WrangleStatus {
    match r {
        Ok(()) => WrangleStatus::Ok,
        Err(e) => fail(WrangleStatus::from(&e), e.to_string()),
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, WrangleStatus> {
    if p.is_null() {
        return Err(fail(WrangleStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WrangleStatus::InvalidUtf8, "argument is not UTF-8"))
}

unsafe fn session<'a>(p: *mut WrangleSession) -> Result<&'a mut Session, WrangleStatus> {
    p.as_mut()
        .map(|s| &mut s.inner)
        .ok_or_else(|| fail(WrangleStatus::NullArgument, "null session handle"))
}

unsafe fn give(out: *mut *mut c_char, s: String) -> WrangleStatus {
    if out.is_null() {
        return fail(WrangleStatus::NullArgument, "null output pointer");
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            WrangleStatus::Ok
        }
        Err(_) => fail(WrangleStatus::InvalidData, "result contains a NUL byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! wr {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return fail(WrangleStatus::from(&e), e.to_string()),
        }
    };
}

/// Opens a session. `bindings` uses the wire form
/// `slot=path,slot=path`; `settings_json` may be null or a JSON object
/// with `seed`, `preview_rows`, `column` and `m`.
///
/// # Safety
/// String arguments must be null or valid NUL-terminated strings and `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_new(
    assistant: *const c_char,
    bindings: *const c_char,
    settings_json: *const c_char,
    out: *mut *mut WrangleSession,
) -> WrangleStatus {
    guard(|| {
        if out.is_null() {
            return fail(WrangleStatus::NullArgument, "null output pointer");
        }
        let id = tri!(text(assistant));
        let pairs = wr!(decode_bindings(tri!(text(bindings))));
        let settings = if settings_json.is_null() {
            Settings::default()
        } else {
            match serde_json::from_str(tri!(text(settings_json))) {
                Ok(s) => s,
                Err(e) => return fail(WrangleStatus::InvalidData, format!("settings: {e}")),
            }
        };
        let bindings = pairs.into_iter().map(|(k, v)| (k, PathBuf::from(v))).collect();
        let inner = wr!(Session::init(id, bindings, settings));
        *out = Box::into_raw(Box::new(WrangleSession { inner }));
        WrangleStatus::Ok
    })
}

/// # Safety
/// `s` must be null or a handle from [`wrangle_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_free(s: *mut WrangleSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// The recommended script for the current interaction set, one patch per
/// line.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_script(s: *mut WrangleSession, out: *mut *mut c_char) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        let rec = wr!(s.step());
        give(out, rec.script.iter().map(|l| format!("{l}\n")).collect())
    })
}

/// Offered choices in the wire form: label line, interaction line, and a
/// blank line at the end.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_choices(s: *mut WrangleSession, out: *mut *mut c_char) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        let rec = wr!(s.step());
        let text = wr!(encode_choices(&rec.choices));
        give(out, text)
    })
}

/// # Safety
/// `s` must be a live handle and `count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_choice_count(s: *mut WrangleSession, count: *mut usize) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        if count.is_null() {
            return fail(WrangleStatus::NullArgument, "null output pointer");
        }
        *count = wr!(s.step()).choices.len();
        WrangleStatus::Ok
    })
}

/// Selects the choice at a 0-based index of the current list.
///
/// # Safety
/// `s` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_select(s: *mut WrangleSession, index: usize) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        wr!(s.step());
        check(s.select(index))
    })
}

/// Adds a constraint given in its textual form.
///
/// # Safety
/// `s` must be a live handle and `constraint` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_constrain(s: *mut WrangleSession, constraint: *const c_char) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        let c = tri!(text(constraint));
        check(s.constrain(c))
    })
}

/// Accepts the current recommendation and returns its script.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_accept(s: *mut WrangleSession, out: *mut *mut c_char) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        wr!(s.step());
        let r = wr!(s.accept());
        give(out, r.script_text)
    })
}

/// The accepted output table as CSV.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wrangle_session_result_csv(s: *mut WrangleSession, out: *mut *mut c_char) -> WrangleStatus {
    guard(|| {
        let s = tri!(session(s));
        match s.result() {
            Some(r) => give(out, r.output.to_csv_string()),
            None => fail(WrangleStatus::NoRecommendation, "session has not been accepted"),
        }
    })
}

/// The message of the last failure on this thread, or null.
#[no_mangle]
pub extern "C" fn wrangle_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `p` must be null or a string returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn wrangle_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}
