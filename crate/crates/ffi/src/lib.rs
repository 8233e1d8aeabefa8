//! C ABI over `lacunaria`.
//!
//! Every fallible call returns a [`LacStatus`]; on failure the message is
//! available from [`lac_last_error_message`] until the next failing call on
//! the same thread. Objects are opaque handles released with the matching
//! `*_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lacunaria::algebra::GroupAlgebraElement;
use lacunaria::io::parse_element;
use lacunaria::lengths::{check_conditionally_negative, LengthFunction};
use lacunaria::semigroup_bmo::{bmo_estimate, bmo_lower_witness, torus_bmo_estimate};
use lacunaria::sidon_sets::{count_intersection, is_free_basis, is_free_set};
use lacunaria::truncated::operator_norm_lower;
use lacunaria::words::{enumerate_ball, parse_word, DEFAULT_BALL_CAP};
use lacunaria::{Error, Word};
use num_complex::Complex64;

/// Result codes shared by all calls.
#[repr(C)]
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LacStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    BudgetExceeded = 4,
    NonConvergence = 5,
    NotFree = 6,
    Internal = 99,
}

/// A reduced word of a free group.
pub struct LacWord(Word);

/// A finitely supported element with matrix coefficients.
pub struct LacElement(GroupAlgebraElement);

/// A length function on a free group.
pub struct LacLength(LengthFunction);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LacStatus {
    match e {
        Error::Parse(_) | Error::Json(_) => LacStatus::Parse,
        Error::BallTooLarge { .. } | Error::BudgetExceeded { .. } | Error::SupportTooLarge { .. } => {
            LacStatus::BudgetExceeded
        }
        Error::NonConvergence { .. } => LacStatus::NonConvergence,
        Error::MissingFreeCertificate => LacStatus::NotFree,
        _ => LacStatus::InvalidArgument,
    }
}

struct Fail(LacStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(LacStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, recording its error or panic.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> LacStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LacStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            LacStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LacStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next failing call.
#[no_mangle]
pub extern "C" fn lac_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lac_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a word literal such as `"1 2 -1"`, `"e"` or `"abA"`.
///
/// # Safety
/// `literal` must be a valid C string and `out_word` writable.
#[no_mangle]
pub unsafe extern "C" fn lac_word_parse(literal: *const c_char, out_word: *mut *mut LacWord) -> LacStatus {
    guard(|| {
        let slot = out(out_word, "out_word")?;
        let w = parse_word(text(literal, "literal")?).map_err(Error::from)?;
        *slot = Box::into_raw(Box::new(LacWord(w)));
        Ok(())
    })
}

/// Builds a word from signed generator indices, reducing it.
///
/// # Safety
/// `letters` must point to `len` integers (or be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn lac_word_from_letters(
    letters: *const i32,
    len: usize,
    out_word: *mut *mut LacWord,
) -> LacStatus {
    guard(|| {
        let slot = out(out_word, "out_word")?;
        let slice = if len == 0 {
            &[][..]
        } else {
            if letters.is_null() {
                return Err(null("letters"));
            }
            std::slice::from_raw_parts(letters, len)
        };
        let w = Word::from_letters(slice.iter().copied())?;
        *slot = Box::into_raw(Box::new(LacWord(w)));
        Ok(())
    })
}

/// # Safety
/// `w` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lac_word_free(w: *mut LacWord) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_word_length(w: *const LacWord, out_len: *mut usize) -> LacStatus {
    guard(|| {
        *out(out_len, "out_len")? = borrow(w, "w")?.0.len();
        Ok(())
    })
}

/// `a * b`, reduced.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_word_multiply(
    a: *const LacWord,
    b: *const LacWord,
    out_word: *mut *mut LacWord,
) -> LacStatus {
    guard(|| {
        let product = borrow(a, "a")?.0.mul(&borrow(b, "b")?.0);
        *out(out_word, "out_word")? = Box::into_raw(Box::new(LacWord(product)));
        Ok(())
    })
}

/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_word_inverse(w: *const LacWord, out_word: *mut *mut LacWord) -> LacStatus {
    guard(|| {
        let inv = borrow(w, "w")?.0.inverse();
        *out(out_word, "out_word")? = Box::into_raw(Box::new(LacWord(inv)));
        Ok(())
    })
}

/// Literal form of a word; release with [`lac_string_free`].
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_word_to_string(w: *const LacWord, out_str: *mut *mut c_char) -> LacStatus {
    guard(|| {
        let s = CString::new(borrow(w, "w")?.0.to_string()).expect("literals have no nul");
        *out(out_str, "out_str")? = s.into_raw();
        Ok(())
    })
}

/// Length function by name: `word`, `abs` or `pow:<alpha>`.
///
/// # Safety
/// `name` must be a valid C string and `out_psi` writable.
#[no_mangle]
pub unsafe extern "C" fn lac_length_from_name(name: *const c_char, out_psi: *mut *mut LacLength) -> LacStatus {
    guard(|| {
        let slot = out(out_psi, "out_psi")?;
        let psi = LengthFunction::from_name(text(name, "name")?)?;
        *slot = Box::into_raw(Box::new(LacLength(psi)));
        Ok(())
    })
}

/// # Safety
/// `psi` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lac_length_free(psi: *mut LacLength) {
    if !psi.is_null() {
        drop(Box::from_raw(psi));
    }
}

/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_length_evaluate(
    psi: *const LacLength,
    w: *const LacWord,
    out_value: *mut f64,
) -> LacStatus {
    guard(|| {
        *out(out_value, "out_value")? = borrow(psi, "psi")?.0.evaluate(&borrow(w, "w")?.0)?;
        Ok(())
    })
}

/// Conditional negativity of `psi` on the ball of the given rank and radius.
/// `out_passed` receives 1 or 0.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_cn_check_ball(
    psi: *const LacLength,
    rank: u32,
    radius: usize,
    tol: f64,
    out_passed: *mut c_int,
    out_max_eigenvalue: *mut f64,
) -> LacStatus {
    guard(|| {
        let psi = borrow(psi, "psi")?;
        let set = enumerate_ball(rank, radius, DEFAULT_BALL_CAP)?;
        let verdict = check_conditionally_negative(&psi.0, &set, tol)?;
        *out(out_passed, "out_passed")? = c_int::from(verdict.passed);
        *out(out_max_eigenvalue, "out_max_eigenvalue")? = verdict.max_eigenvalue;
        Ok(())
    })
}

/// Element from the JSON fixture format.
///
/// # Safety
/// `json` must be a valid C string and `out_element` writable.
#[no_mangle]
pub unsafe extern "C" fn lac_element_from_json(json: *const c_char, out_element: *mut *mut LacElement) -> LacStatus {
    guard(|| {
        let slot = out(out_element, "out_element")?;
        let x = parse_element(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(LacElement(x)));
        Ok(())
    })
}

/// Scalar element `sum re[i] + i im[i]` at `words[i]`.
///
/// # Safety
/// The three arrays must hold `len` entries; word handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_from_scalars(
    words: *const *const LacWord,
    re: *const f64,
    im: *const f64,
    len: usize,
    out_element: *mut *mut LacElement,
) -> LacStatus {
    guard(|| {
        let slot = out(out_element, "out_element")?;
        if len > 0 && (words.is_null() || re.is_null() || im.is_null()) {
            return Err(null("words, re or im"));
        }
        let mut terms = Vec::with_capacity(len);
        for i in 0..len {
            let w = borrow(*words.add(i), "word handle")?;
            terms.push((w.0.clone(), Complex64::new(*re.add(i), *im.add(i))));
        }
        *slot = Box::into_raw(Box::new(LacElement(GroupAlgebraElement::from_scalars(terms))));
        Ok(())
    })
}

/// # Safety
/// `x` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lac_element_free(x: *mut LacElement) {
    if !x.is_null() {
        drop(Box::from_raw(x));
    }
}

/// Number of support terms.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_len(x: *const LacElement, out_len: *mut usize) -> LacStatus {
    guard(|| {
        *out(out_len, "out_len")? = borrow(x, "x")?.0.len();
        Ok(())
    })
}

/// `‖sum c^† c‖` and `‖sum c c^†‖`.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_rcp_norms(
    x: *const LacElement,
    out_column: *mut f64,
    out_row: *mut f64,
) -> LacStatus {
    guard(|| {
        let (col, row) = borrow(x, "x")?.0.rcp_norms();
        *out(out_column, "out_column")? = col;
        *out(out_row, "out_row")? = row;
        Ok(())
    })
}

/// Exact `‖x‖_p` for even `p`.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_moment_norm(
    x: *const LacElement,
    p: u32,
    support_cap: usize,
    out_norm: *mut f64,
) -> LacStatus {
    guard(|| {
        *out(out_norm, "out_norm")? = borrow(x, "x")?.0.moment_norm(p, support_cap)?;
        Ok(())
    })
}

/// Lower bound for the operator norm from the ball of radius `radius`.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_operator_norm_lower(
    x: *const LacElement,
    radius: usize,
    ball_cap: usize,
    out_norm: *mut f64,
) -> LacStatus {
    guard(|| {
        *out(out_norm, "out_norm")? = operator_norm_lower(&borrow(x, "x")?.0, radius, ball_cap)?.value;
        Ok(())
    })
}

/// Haagerup-Pisier upper bound, after certifying the support as a free set.
/// Fails with `LAC_STATUS_NOT_FREE` when it is not.
///
/// # Safety
/// Handles must be valid.
#[no_mangle]
pub unsafe extern "C" fn lac_element_free_upper_bound(x: *const LacElement, out_bound: *mut f64) -> LacStatus {
    guard(|| {
        let x = &borrow(x, "x")?.0;
        let certified = is_free_set(&x.support())?.free;
        *out(out_bound, "out_bound")? = x.haagerup_pisier_bound(certified)?;
        Ok(())
    })
}

/// BMO estimate on the log grid `grid[0..grid_len]`. `out_upper` receives
/// NaN when no lacunary certificate exists.
///
/// # Safety
/// Handles must be valid; `grid` must hold `grid_len` values.
#[no_mangle]
pub unsafe extern "C" fn lac_bmo_estimate(
    psi: *const LacLength,
    x: *const LacElement,
    grid: *const f64,
    grid_len: usize,
    radius: usize,
    out_lower: *mut f64,
    out_upper: *mut f64,
    out_lower_witness: *mut f64,
) -> LacStatus {
    guard(|| {
        let (psi, x) = (&borrow(psi, "psi")?.0, &borrow(x, "x")?.0);
        if grid.is_null() || grid_len == 0 {
            return Err(Fail(LacStatus::InvalidArgument, "empty grid".into()));
        }
        let grid = std::slice::from_raw_parts(grid, grid_len);
        let est = bmo_estimate(psi, x, grid, radius, DEFAULT_BALL_CAP)?;
        *out(out_lower, "out_lower")? = est.bmo_lower;
        *out(out_upper, "out_upper")? = est.certified_upper.unwrap_or(f64::NAN);
        *out(out_lower_witness, "out_lower_witness")? = bmo_lower_witness(psi, x, grid, true)?;
        Ok(())
    })
}

/// Circle BMO estimate for scalar elements of `Z`.
///
/// # Safety
/// Handles must be valid; `grid` must hold `grid_len` values.
#[no_mangle]
pub unsafe extern "C" fn lac_torus_bmo_estimate(
    psi: *const LacLength,
    x: *const LacElement,
    grid: *const f64,
    grid_len: usize,
    samples: usize,
    out_value: *mut f64,
) -> LacStatus {
    guard(|| {
        let (psi, x) = (&borrow(psi, "psi")?.0, &borrow(x, "x")?.0);
        if grid.is_null() || grid_len == 0 {
            return Err(Fail(LacStatus::InvalidArgument, "empty grid".into()));
        }
        let grid = std::slice::from_raw_parts(grid, grid_len);
        *out(out_value, "out_value")? = torus_bmo_estimate(psi, x, grid, samples)?.value;
        Ok(())
    })
}

/// Free basis test by folding. `out_free` receives 1 or 0.
///
/// # Safety
/// `words` must hold `len` valid handles.
#[no_mangle]
pub unsafe extern "C" fn lac_is_free_basis(
    words: *const *const LacWord,
    len: usize,
    out_free: *mut c_int,
    out_rank: *mut usize,
) -> LacStatus {
    guard(|| {
        if words.is_null() {
            return Err(null("words"));
        }
        let list = (0..len)
            .map(|i| borrow(*words.add(i), "word handle").map(|w| w.0.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let report = is_free_basis(&list)?;
        *out(out_free, "out_free")? = c_int::from(report.free);
        *out(out_rank, "out_rank")? = report.rank;
        Ok(())
    })
}

/// Size of `π(Q_n)` within the ball of radius `2nm` of `F_2`.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lac_count_intersection(
    n: usize,
    m: u32,
    out_count: *mut usize,
    out_ratio: *mut f64,
    out_ball_exponent: *mut f64,
) -> LacStatus {
    guard(|| {
        let r = count_intersection(n, m, lacunaria::sidon_sets::DEFAULT_COMBINATORIAL_CAP)?;
        *out(out_count, "out_count")? = r.count;
        *out(out_ratio, "out_ratio")? = r.ratio_to_mn;
        *out(out_ball_exponent, "out_ball_exponent")? = r.ball_exponent;
        Ok(())
    })
}
