//! C ABI over `poulsen-core`.
//!
//! Objects cross the boundary as opaque handles created by `pl_*_new` style
//! calls and released with the matching `pl_*_free`. Every fallible call
//! returns a [`PlStatus`]; on failure the message is available from
//! [`pl_last_error_message`] on the same thread. Strings returned by the
//! library are owned by the caller and must be released with
//! [`pl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poulsen_core::bfree::BSet;
use poulsen_core::counterexample::cylinder_separation;
use poulsen_core::midpoint::N0Choice;
use poulsen_core::{
    approximate_midpoint, build_doubled_chain, build_single_chain, BitWindow, Block, Error,
    MarkovChain, MidpointRequest, MidpointResult,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    LengthMismatch = 3,
    OutOfRange = 4,
    Parse = 5,
    InsufficientGenericity = 6,
    TooLarge = 7,
    Internal = 8,
}

impl From<&Error> for PlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::LengthMismatch { .. }
            | Error::Misaligned { .. }
            | Error::ScheduleMismatch(_) => PlStatus::LengthMismatch,
            Error::OutOfRange { .. } | Error::WindowTooShort { .. } => PlStatus::OutOfRange,
            Error::Literal(_) | Error::BitFile(_) | Error::Parse(_) => PlStatus::Parse,
            Error::InsufficientGenericity(_) => PlStatus::InsufficientGenericity,
            Error::TooLarge(_) => PlStatus::TooLarge,
            Error::NoDominatedMember(_) => PlStatus::Internal,
            Error::BlockLength(_)
            | Error::BlockCode { .. }
            | Error::Parameter(_)
            | Error::ChainSize(_) => PlStatus::InvalidArgument,
        }
    }
}

/// A set of moduli.
pub struct PlBSet(BSet);

/// A finite 0/1 window.
pub struct PlWindow(BitWindow);

/// One of the two ladder chains with exact rational entries.
pub struct PlChain(MarkovChain);

/// Outcome of a midpoint construction.
pub struct PlMidpoint(MidpointResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PlStatus, msg: impl Into<String>) -> PlStatus {
    set_error(msg.into());
    status
}

fn from_core(e: Error) -> PlStatus {
    fail(PlStatus::from(&e), e.to_string())
}

/// Runs `f`, turning panics into [`PlStatus::Internal`].
fn guard(f: impl FnOnce() -> PlStatus) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(PlStatus::Internal, "panic inside poulsen"),
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, PlStatus> {
    if s.is_null() {
        return Err(fail(PlStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(PlStatus::Parse, "string argument is not UTF-8"))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, PlStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PlStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> PlStatus {
    if out.is_null() {
        return fail(PlStatus::NullPointer, "null output pointer");
    }
    out.write(value);
    PlStatus::Ok
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! try_ffi {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread, or null. Release with
/// [`pl_string_free`].
#[no_mangle]
pub extern "C" fn pl_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map_or(ptr::null_mut(), |c| c.clone().into_raw())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn pl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version; static storage, do not free.
#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse `"2,3,25"`, `"squares-of-primes"` or `"primitive-abundant"`.
/// `limit` is required (nonzero) for the generated families.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_bset_parse(
    spec: *const c_char,
    limit: u64,
    out: *mut *mut PlBSet,
) -> PlStatus {
    guard(|| {
        let spec = try_ffi!(str_arg(spec));
        let limit = (limit > 0).then_some(limit);
        match BSet::parse(spec, limit) {
            Ok(b) => put(out, Box::into_raw(Box::new(PlBSet(b)))),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `b` must be null or a handle from [`pl_bset_parse`].
#[no_mangle]
pub unsafe extern "C" fn pl_bset_free(b: *mut PlBSet) {
    if !b.is_null() {
        drop(Box::from_raw(b));
    }
}

/// Fraction of `[0, n)` free of every modulus.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_bset_density(b: *const PlBSet, n: u64, out: *mut f64) -> PlStatus {
    guard(|| {
        let b = try_ffi!(handle(b));
        match b.0.upper_density(n) {
            Ok(d) => put(out, d.value),
            Err(e) => from_core(e),
        }
    })
}

/// The indicator window of the B-free integers on `[0, n)`.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_bset_sieve(
    b: *const PlBSet,
    n: u64,
    out: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| {
        let b = try_ffi!(handle(b));
        put(out, Box::into_raw(Box::new(PlWindow(b.0.sieve_window(n)))))
    })
}

/// Window on `[start, start + len)` from one byte per symbol (nonzero = 1).
///
/// # Safety
/// `bits` must point to `len` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_window_from_bits(
    start: i64,
    bits: *const u8,
    len: usize,
    out: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| {
        if bits.is_null() && len > 0 {
            return fail(PlStatus::NullPointer, "null bits");
        }
        let slice = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(bits, len)
        };
        let w = BitWindow::from_bits(start, slice.iter().map(|&b| b != 0));
        put(out, Box::into_raw(Box::new(PlWindow(w))))
    })
}

/// Seeded i.i.d. window with `P(1) = p`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_window_bernoulli(
    start: i64,
    len: usize,
    p: f64,
    seed: u64,
    out: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| match BitWindow::bernoulli(start, len, p, seed) {
        Ok(w) => put(out, Box::into_raw(Box::new(PlWindow(w)))),
        Err(e) => from_core(e),
    })
}

/// Coordinatewise product of two aligned windows.
///
/// # Safety
/// Valid handles and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_window_multiply(
    a: *const PlWindow,
    b: *const PlWindow,
    out: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| {
        let (a, b) = (try_ffi!(handle(a)), try_ffi!(handle(b)));
        match a.0.multiply(&b.0) {
            Ok(w) => put(out, Box::into_raw(Box::new(PlWindow(w)))),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `w` must be a valid handle; returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn pl_window_len(w: *const PlWindow) -> usize {
    w.as_ref().map_or(0, |w| w.0.len())
}

/// # Safety
/// `w` must be a valid handle; returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn pl_window_count_ones(w: *const PlWindow) -> u64 {
    w.as_ref().map_or(0, |w| w.0.count_ones())
}

/// Copy the symbols (one byte each) into `buf`, which holds `buf_len` bytes.
///
/// # Safety
/// `buf` must be writable for `buf_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pl_window_copy_bits(
    w: *const PlWindow,
    buf: *mut u8,
    buf_len: usize,
) -> PlStatus {
    guard(|| {
        let w = try_ffi!(handle(w));
        if buf.is_null() {
            return fail(PlStatus::NullPointer, "null buffer");
        }
        if buf_len < w.0.len() {
            return fail(
                PlStatus::OutOfRange,
                format!("buffer holds {buf_len} bytes, window has {}", w.0.len()),
            );
        }
        let dst = std::slice::from_raw_parts_mut(buf, w.0.len());
        for (d, b) in dst.iter_mut().zip(w.0.iter()) {
            *d = b as u8;
        }
        PlStatus::Ok
    })
}

/// The window in the text format `# start=<i> length=<N>` plus one line of bits.
///
/// # Safety
/// Valid handle; release the result with [`pl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pl_window_to_string(w: *const PlWindow) -> *mut c_char {
    match w.as_ref() {
        Some(w) => into_c_string(w.0.to_bitstring_file()),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `w` must be null or a window handle.
#[no_mangle]
pub unsafe extern "C" fn pl_window_free(w: *mut PlWindow) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Build the single (`doubled == false`) or doubled ladder chain.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_new(
    n0: usize,
    doubled: bool,
    out: *mut *mut PlChain,
) -> PlStatus {
    guard(|| {
        let chain = if doubled {
            build_doubled_chain(n0)
        } else {
            build_single_chain(n0)
        };
        match chain {
            Ok(c) => put(out, Box::into_raw(Box::new(PlChain(c)))),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `c` must be a valid handle; returns 0 for null.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_state_count(c: *const PlChain) -> usize {
    c.as_ref().map_or(0, |c| c.0.states().len())
}

/// Row-stochastic and `p·P = p`, in exact arithmetic.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_verify(c: *const PlChain, out: *mut bool) -> PlStatus {
    guard(|| {
        let c = try_ffi!(handle(c));
        put(out, c.0.is_row_stochastic() && c.0.is_stationary())
    })
}

/// Stationary weight of state `i` as `"num/den"`.
///
/// # Safety
/// Valid handle; release the result with [`pl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pl_chain_stationary(c: *const PlChain, i: usize) -> *mut c_char {
    match c.as_ref().and_then(|c| c.0.stationary().get(i)) {
        Some(x) => into_c_string(x.to_string()),
        None => {
            set_error(format!("no state {i}"));
            ptr::null_mut()
        }
    }
}

/// Smallest power with all entries positive; 0 if the chain is not primitive.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_primitivity_exponent(
    c: *const PlChain,
    out: *mut usize,
) -> PlStatus {
    guard(|| {
        let c = try_ffi!(handle(c));
        put(out, c.0.primitivity_exponent().unwrap_or(0))
    })
}

/// # Safety
/// `c` must be null or a chain handle.
#[no_mangle]
pub unsafe extern "C" fn pl_chain_free(c: *mut PlChain) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Run the midpoint construction. `eps <= 0` selects `eps0 / 2`; `n0 == 0`
/// selects the automatic block length.
///
/// # Safety
/// Valid window handles and output pointer.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pl_midpoint_run(
    eta_nu: *const PlWindow,
    x1: *const PlWindow,
    x2: *const PlWindow,
    k0: usize,
    eps0: f64,
    eps: f64,
    n0: usize,
    seed: u64,
    out: *mut *mut PlMidpoint,
) -> PlStatus {
    guard(|| {
        let eta = try_ffi!(handle(eta_nu));
        let (x1, x2) = (try_ffi!(handle(x1)), try_ffi!(handle(x2)));
        let mut req =
            MidpointRequest::new(eta.0.clone(), x1.0.clone(), x2.0.clone(), k0, eps0, seed);
        if eps > 0.0 {
            req.eps = eps;
        }
        if n0 > 0 {
            req.n0 = N0Choice::Fixed(n0);
        }
        match approximate_midpoint(&req) {
            Ok(r) => put(out, Box::into_raw(Box::new(PlMidpoint(r)))),
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_achieved_tv(r: *const PlMidpoint, out: *mut f64) -> PlStatus {
    guard(|| {
        let r = try_ffi!(handle(r));
        put(out, r.0.achieved_tv)
    })
}

/// `true` iff every internal check of the run holds.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_passed(r: *const PlMidpoint, out: *mut bool) -> PlStatus {
    guard(|| {
        let r = try_ffi!(handle(r));
        put(out, r.0.checks.all())
    })
}

/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_n0(r: *const PlMidpoint, out: *mut usize) -> PlStatus {
    guard(|| {
        let r = try_ffi!(handle(r));
        put(out, r.0.n0)
    })
}

/// A new window handle holding the constructed sequence.
///
/// # Safety
/// Valid handle and output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_eta_bar(
    r: *const PlMidpoint,
    out: *mut *mut PlWindow,
) -> PlStatus {
    guard(|| {
        let r = try_ffi!(handle(r));
        put(out, Box::into_raw(Box::new(PlWindow(r.0.eta_bar.clone()))))
    })
}

/// Diagnostics as JSON.
///
/// # Safety
/// Valid handle; release the result with [`pl_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_to_json(r: *const PlMidpoint) -> *mut c_char {
    match r.as_ref().map(|r| serde_json::to_string(&r.0)) {
        Some(Ok(s)) => into_c_string(s),
        Some(Err(e)) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `r` must be null or a midpoint handle.
#[no_mangle]
pub unsafe extern "C" fn pl_midpoint_free(r: *mut PlMidpoint) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Whether neither full-support pattern of two equal-length periods occurs in
/// the hereditary closure of the other.
///
/// # Safety
/// NUL-terminated block literals and a valid output pointer.
#[no_mangle]
pub unsafe extern "C" fn pl_periods_separated(
    a: *const c_char,
    b: *const c_char,
    out: *mut bool,
) -> PlStatus {
    guard(|| {
        let (a, b) = (try_ffi!(str_arg(a)), try_ffi!(str_arg(b)));
        let parse = |s: &str| s.parse::<Block>();
        let (a, b) = match (parse(a), parse(b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return from_core(e),
        };
        match cylinder_separation(&a, &b) {
            Ok(r) => put(out, r.separated),
            Err(e) => from_core(e),
        }
    })
}
