//! C interface to `lqrl`.
//!
//! Every fallible function returns an [`LqrlStatus`]; on failure the message
//! is available from [`lqrl_last_error_message`] on the same thread until the
//! next failing call. Matrices cross the boundary as row-major `double`
//! arrays. Objects are opaque handles created by a `*_new` function and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lqrl::{Error, Matrix};

mod algebra;
mod lq;
mod mlp;
mod rls;

pub use algebra::*;
pub use lq::*;
pub use mlp::*;
pub use rls::*;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqrlStatus {
    Ok = 0,
    NullPointer = 1,
    Dimension = 2,
    Domain = 3,
    Singular = 4,
    Convergence = 5,
    Numeric = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

pub(crate) enum FfiError {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for FfiError {
    fn from(e: Error) -> Self {
        FfiError::Core(e)
    }
}

pub(crate) type FfiResult<T> = Result<T, FfiError>;

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(err: FfiError) -> LqrlStatus {
    let (status, message) = match err {
        FfiError::Null(name) => (
            LqrlStatus::NullPointer,
            format!("null pointer passed as `{name}`"),
        ),
        FfiError::Core(e) => {
            let status = match e {
                Error::Dimension(_) => LqrlStatus::Dimension,
                Error::Domain(_) => LqrlStatus::Domain,
                Error::Singular { .. } => LqrlStatus::Singular,
                Error::Convergence { .. } => LqrlStatus::Convergence,
                Error::Numeric { .. } => LqrlStatus::Numeric,
                Error::Config(_) => LqrlStatus::Config,
                Error::Io { .. } => LqrlStatus::Io,
            };
            (status, e.to_string())
        }
    };
    set_last_error(message);
    status
}

/// Runs `body`, converting errors and panics into a status code.
pub(crate) fn guard<F>(body: F) -> LqrlStatus
where
    F: FnOnce() -> FfiResult<()>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LqrlStatus::Ok,
        Ok(Err(e)) => status_of(e),
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            LqrlStatus::Panic
        }
    }
}

pub(crate) unsafe fn input<'a>(
    data: *const f64,
    len: usize,
    name: &'static str,
) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(FfiError::Null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

pub(crate) unsafe fn output<'a>(
    data: *mut f64,
    len: usize,
    name: &'static str,
) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(FfiError::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

pub(crate) unsafe fn matrix_in(
    data: *const f64,
    rows: usize,
    cols: usize,
    name: &'static str,
) -> FfiResult<Matrix> {
    Ok(Matrix::from_row_slice(
        rows,
        cols,
        input(data, rows * cols, name)?,
    ))
}

pub(crate) unsafe fn matrix_out(m: &Matrix, data: *mut f64, name: &'static str) -> FfiResult<()> {
    if data.is_null() {
        return Err(FfiError::Null(name));
    }
    let out = output(data, m.len(), name)?;
    for (i, row) in m.row_iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[i * m.ncols() + j] = *v;
        }
    }
    Ok(())
}

pub(crate) unsafe fn handle<'a, T>(ptr: *const T, name: &'static str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or(FfiError::Null(name))
}

pub(crate) unsafe fn handle_mut<'a, T>(ptr: *mut T, name: &'static str) -> FfiResult<&'a mut T> {
    ptr.as_mut().ok_or(FfiError::Null(name))
}

pub(crate) unsafe fn store<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(FfiError::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the most recent failure on this thread, or NULL if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lqrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Forgets the stored error message.
#[no_mangle]
pub extern "C" fn lqrl_clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Static name of a status code, e.g. `"singular"`.
#[no_mangle]
pub extern "C" fn lqrl_status_name(status: LqrlStatus) -> *const c_char {
    let name: &'static std::ffi::CStr = match status {
        LqrlStatus::Ok => c"ok",
        LqrlStatus::NullPointer => c"null pointer",
        LqrlStatus::Dimension => c"dimension",
        LqrlStatus::Domain => c"domain",
        LqrlStatus::Singular => c"singular",
        LqrlStatus::Convergence => c"convergence",
        LqrlStatus::Numeric => c"numeric",
        LqrlStatus::Config => c"config",
        LqrlStatus::Io => c"io",
        LqrlStatus::Panic => c"panic",
    };
    name.as_ptr()
}

/// Library version as a NUL-terminated string.
#[no_mangle]
pub extern "C" fn lqrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
