//! C ABI over `tilebesov`: opaque tiling and function handles, status codes and a
//! thread-local error message.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use tilebesov::besov::{self, NormParams};
use tilebesov::exponents::{self, ExponentOptions, Route};
use tilebesov::funcrep::Builtin;
use tilebesov::grid::{GridFunction, GridSpace};
use tilebesov::mra::GeneratorSet;
use tilebesov::tiling::TilingSpec;
use tilebesov::{Error, ErrorClass};

/// Result of every `tb_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Validation = 3,
    Numerical = 4,
    Config = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A validated tiling `(M, digits)`.
pub struct TbTiling {
    spec: Arc<TilingSpec>,
}

/// Samples of a function on a periodic refinement grid.
pub struct TbFunction {
    inner: GridFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn from_error(e: Error) -> TbStatus {
    set_error(e.to_string());
    match e.class() {
        ErrorClass::Config => TbStatus::Config,
        ErrorClass::Validation => TbStatus::Validation,
        ErrorClass::Numerical => TbStatus::Numerical,
        ErrorClass::Io => TbStatus::Io,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TbStatus>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TbStatus::Panic
        }
    }
}

fn invalid(msg: &str) -> TbStatus {
    set_error(msg);
    TbStatus::InvalidArgument
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], TbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        set_error("null array pointer");
        return Err(TbStatus::NullPointer);
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, TbStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle");
        TbStatus::NullPointer
    })
}

unsafe fn out<T>(p: *mut T, v: T) -> Result<(), TbStatus> {
    if p.is_null() {
        set_error("null output pointer");
        return Err(TbStatus::NullPointer);
    }
    p.write(v);
    Ok(())
}

unsafe fn string<'a>(p: *const c_char) -> Result<&'a str, TbStatus> {
    if p.is_null() {
        set_error("null string");
        return Err(TbStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("string is not UTF-8"))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn tb_status_string(status: TbStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TbStatus::Ok => c"ok",
        TbStatus::NullPointer => c"null pointer",
        TbStatus::InvalidArgument => c"invalid argument",
        TbStatus::Validation => c"validation error",
        TbStatus::Numerical => c"numerical failure",
        TbStatus::Config => c"configuration error",
        TbStatus::Io => c"i/o error",
        TbStatus::BufferTooSmall => c"buffer too small",
        TbStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (nul-terminated, truncated to
/// `cap`). Returns the full message length excluding the terminator, or 0 when there is none.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tb_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let k = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Builds a tiling from a row-major `n x n` matrix and `m` digits of `n` entries each.
///
/// # Safety
/// `matrix` must hold `n * n` values, `digits` must hold `m * n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_tiling_new(
    matrix: *const i64,
    n: usize,
    digits: *const i64,
    m: usize,
    out_tiling: *mut *mut TbTiling,
) -> TbStatus {
    guard(|| {
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        let mat = slice(matrix, n * n)?;
        let dig = slice(digits, m * n)?;
        let rows: Vec<Vec<i64>> = mat.chunks(n).map(<[i64]>::to_vec).collect();
        let ds: Vec<Vec<i64>> = dig.chunks(n).map(<[i64]>::to_vec).collect();
        let spec = TilingSpec::new(&rows, &ds).map_err(from_error)?;
        out(out_tiling, Box::into_raw(Box::new(TbTiling { spec: Arc::new(spec) })))
    })
}

/// # Safety
/// `tiling` must be null or a handle from `tb_tiling_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_tiling_free(tiling: *mut TbTiling) {
    if !tiling.is_null() {
        drop(Box::from_raw(tiling));
    }
}

/// Dimension `n`, digit count `m` and contraction `lambda0`.
///
/// # Safety
/// `tiling` must be a live handle; output pointers may be null to skip them.
#[no_mangle]
pub unsafe extern "C" fn tb_tiling_info(tiling: *const TbTiling, out_n: *mut usize, out_m: *mut usize, out_lambda0: *mut f64) -> TbStatus {
    guard(|| {
        let t = handle(tiling)?;
        if !out_n.is_null() {
            *out_n = t.spec.n();
        }
        if !out_m.is_null() {
            *out_m = t.spec.m();
        }
        if !out_lambda0.is_null() {
            *out_lambda0 = t.spec.lambda0();
        }
        Ok(())
    })
}

/// Writes the `m^depth` tile points (`n` coordinates each) into `points`. With `points` null
/// only `out_count` is set; a short buffer yields `BufferTooSmall` with `out_count` set.
///
/// # Safety
/// `points` must be null or hold `cap` writable doubles; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_tiling_points(
    tiling: *const TbTiling,
    depth: usize,
    points: *mut f64,
    cap: usize,
    out_count: *mut usize,
) -> TbStatus {
    guard(|| {
        let t = handle(tiling)?;
        let a = t.spec.tile_points(depth).map_err(from_error)?;
        out(out_count, a.count)?;
        if points.is_null() {
            return Ok(());
        }
        if cap < a.points.len() {
            set_error(format!("need {} doubles, got {cap}", a.points.len()));
            return Err(TbStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(a.points.as_ptr(), points, a.points.len());
        Ok(())
    })
}

/// Digit indices of the level-`level` cell containing `x`.
///
/// # Safety
/// `x` must hold `n` doubles and `digits` at least `level` writable entries.
#[no_mangle]
pub unsafe extern "C" fn tb_tiling_locate(tiling: *const TbTiling, x: *const f64, level: usize, digits: *mut usize) -> TbStatus {
    guard(|| {
        let t = handle(tiling)?;
        let x = slice(x, t.spec.n())?;
        let cell = t.spec.locate(x, level).map_err(from_error)?;
        if level > 0 && digits.is_null() {
            set_error("null digit buffer");
            return Err(TbStatus::NullPointer);
        }
        for (i, d) in cell.digits.iter().enumerate() {
            *digits.add(i) = *d;
        }
        Ok(())
    })
}

fn grid(t: &TbTiling, level: usize) -> Result<Arc<GridSpace>, TbStatus> {
    let w = vec![1; t.spec.n()];
    GridSpace::new(t.spec.clone(), level, &w).map(Arc::new).map_err(from_error)
}

/// Samples a builtin on the level-`level` grid of one tile. Names: `takagi` and
/// `weierstrass` (parameter `mu`), `sine` (frequency), `step` (jump location), `levy`, `zero`.
///
/// # Safety
/// `tiling` must be a live handle, `name` a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_function_builtin(
    tiling: *const TbTiling,
    name: *const c_char,
    parameter: f64,
    level: usize,
    out_function: *mut *mut TbFunction,
) -> TbStatus {
    guard(|| {
        let t = handle(tiling)?;
        let b = match string(name)? {
            "takagi" => Builtin::Takagi { mu: parameter },
            "weierstrass" => Builtin::Weierstrass { mu: parameter },
            "sine" => Builtin::Sine { frequency: parameter },
            "step" => Builtin::Step { at: parameter },
            "levy" => Builtin::Levy,
            "zero" => Builtin::Zero,
            other => return Err(invalid(&format!("unknown builtin `{other}`"))),
        };
        let g = grid(t, level)?;
        let f = b.sample(&g).map_err(from_error)?.function;
        out(out_function, Box::into_raw(Box::new(TbFunction { inner: f })))
    })
}

/// Wraps `len` samples in grid order (`m^level` per tile).
///
/// # Safety
/// `samples` must hold `len` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_function_from_samples(
    tiling: *const TbTiling,
    level: usize,
    samples: *const f64,
    len: usize,
    out_function: *mut *mut TbFunction,
) -> TbStatus {
    guard(|| {
        let t = handle(tiling)?;
        let g = grid(t, level)?;
        let s = slice(samples, len)?;
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(from_error(Error::NonFiniteValue(i)));
        }
        let f = GridFunction::new(g, s.to_vec()).map_err(from_error)?;
        out(out_function, Box::into_raw(Box::new(TbFunction { inner: f })))
    })
}

/// # Safety
/// `function` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tb_function_free(function: *mut TbFunction) {
    if !function.is_null() {
        drop(Box::from_raw(function));
    }
}

/// Number of samples.
///
/// # Safety
/// `function` must be a live handle and `out_len` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_function_len(function: *const TbFunction, out_len: *mut usize) -> TbStatus {
    guard(|| out(out_len, handle(function)?.inner.len()))
}

/// Copies the samples into `buf`.
///
/// # Safety
/// `buf` must hold `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_function_samples(function: *const TbFunction, buf: *mut f64, cap: usize) -> TbStatus {
    guard(|| {
        let f = handle(function)?;
        let s = f.inner.samples();
        if cap < s.len() {
            set_error(format!("need {} doubles, got {cap}", s.len()));
            return Err(TbStatus::BufferTooSmall);
        }
        if buf.is_null() {
            set_error("null sample buffer");
            return Err(TbStatus::NullPointer);
        }
        ptr::copy_nonoverlapping(s.as_ptr(), buf, s.len());
        Ok(())
    })
}

/// Oscillation Besov norm up to level `lmax`; pass `INFINITY` for `p` or `q = inf`.
///
/// # Safety
/// `function` must be a live handle and `out_value` writable.
#[no_mangle]
pub unsafe extern "C" fn tb_besov_norm(function: *const TbFunction, s: f64, p: f64, q: f64, lmax: usize, out_value: *mut f64) -> TbStatus {
    guard(|| {
        let f = handle(function)?;
        let r = besov::besov_norm(&f.inner, &NormParams::new(s, p, q, lmax)).map_err(from_error)?;
        out(out_value, r.value("osc").unwrap_or(f64::NAN))
    })
}

unsafe fn options(route: *const c_char, p: f64, k: usize, lo: usize, hi: usize) -> Result<(Route, ExponentOptions), TbStatus> {
    let r = Route::from_name(string(route)?).map_err(from_error)?;
    Ok((r, ExponentOptions::new(p, k, lo, hi)))
}

/// Global exponent along `route` (`osc`, `diff`, `lp-band`, `sigma`, `residue`, `coeff`,
/// `wavelet`) over levels `lo..=hi`; generator routes use the Haar system.
///
/// # Safety
/// `function` must be a live handle, `route` nul-terminated, outputs writable or null.
#[no_mangle]
pub unsafe extern "C" fn tb_global_exponent(
    function: *const TbFunction,
    route: *const c_char,
    p: f64,
    k: usize,
    lo: usize,
    hi: usize,
    out_estimate: *mut f64,
    out_saturated: *mut bool,
) -> TbStatus {
    guard(|| {
        let f = handle(function)?;
        let (r, o) = options(route, p, k, lo, hi)?;
        let gens = GeneratorSet::haar(f.inner.grid().spec().clone());
        let rep = exponents::global_exponent(&f.inner, r, &o, Some(&gens)).map_err(from_error)?;
        if !out_saturated.is_null() {
            *out_saturated = rep.saturation_flag;
        }
        out(out_estimate, rep.estimate)
    })
}

/// Pointwise exponent at `x` along `osc`, `diff` or `double-limit`.
///
/// # Safety
/// As `tb_global_exponent`; `x` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn tb_pointwise_exponent(
    function: *const TbFunction,
    x: *const f64,
    route: *const c_char,
    p: f64,
    k: usize,
    lo: usize,
    hi: usize,
    out_estimate: *mut f64,
) -> TbStatus {
    guard(|| {
        let f = handle(function)?;
        let x = slice(x, f.inner.grid().n())?;
        let (r, o) = options(route, p, k, lo, hi)?;
        let rep = exponents::pointwise_exponent(&f.inner, x, r, &o).map_err(from_error)?;
        out(out_estimate, rep.estimate)
    })
}
