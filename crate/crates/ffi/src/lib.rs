//! C interface to `lcu-core`. Hamiltonians live behind an opaque handle;
//! every call returns an [`LcuStatus`] and leaves a message for
//! `lcu_last_error_message` on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lcu_core::fcidump::{parse_fcidump, read_fcidump, to_chemist};
use lcu_core::optim::OptimizerConfig;
use lcu_core::report::{compute_norms, run_tensors, DecompositionCache, Method, Picture, RunConfig};
use lcu_core::shift::optimal_shift;
use lcu_core::spectra::spectral_range;
use lcu_core::tensors::SpatialTensors;
use lcu_core::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LcuStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    UnknownMethod = 6,
    Capability = 7,
    Numerical = 8,
    Panic = 9,
}

/// Spatial-orbital Hamiltonian in chemist notation.
pub struct LcuHamiltonian {
    tensors: SpatialTensors,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> LcuStatus {
    match e {
        Error::Io(_) => LcuStatus::Io,
        Error::Parse { .. } | Error::IndexRange { .. } | Error::Json(_) => LcuStatus::Parse,
        Error::UnknownMethod(_) => LcuStatus::UnknownMethod,
        Error::Capability(_) => LcuStatus::Capability,
        e if e.is_numerical() => LcuStatus::Numerical,
        _ => LcuStatus::InvalidInput,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (LcuStatus, String)>) -> LcuStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcuStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LcuStatus::Panic
        }
    }
}

fn lift<T>(r: lcu_core::Result<T>) -> Result<T, (LcuStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (LcuStatus, String) {
    (LcuStatus::NullArgument, format!("`{name}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, (LcuStatus, String)> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (LcuStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn handle<'a>(h: *const LcuHamiltonian) -> Result<&'a LcuHamiltonian, (LcuStatus, String)> {
    h.as_ref().ok_or_else(|| null("hamiltonian"))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn lcu_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lcu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn store(out: *mut *mut LcuHamiltonian, tensors: SpatialTensors) {
    // SAFETY: callers check `out` for null first.
    unsafe { *out = Box::into_raw(Box::new(LcuHamiltonian { tensors })) };
}

/// Load an FCIDUMP file. On success `*out` owns a handle to be released with
/// `lcu_hamiltonian_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_hamiltonian_load(path: *const c_char, out: *mut *mut LcuHamiltonian) -> LcuStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let t = lift(read_fcidump(path).and_then(|r| to_chemist(&r)))?;
        store(out, t);
        Ok(())
    })
}

/// Parse FCIDUMP text held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn lcu_hamiltonian_parse(text: *const c_char, out: *mut *mut LcuHamiltonian) -> LcuStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let t = lift(parse_fcidump(text).and_then(|r| to_chemist(&r)))?;
        store(out, t);
        Ok(())
    })
}

/// Release a handle. Null is ignored.
///
/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lcu_hamiltonian_free(h: *mut LcuHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of spatial orbitals, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lcu_hamiltonian_n_orbitals(h: *const LcuHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.tensors.n_orb())
}

/// 1-norm of one method (`de2`, `pauli`, `oo-pauli`, `ac`, `oo-ac`, `df`,
/// `gcsa-f`, `gcsa-sr`), optionally after the symmetry shift. `*count` gets
/// the number of unitaries, or -1 where none is defined.
///
/// # Safety
/// `h` must be a live handle, `method` NUL-terminated, outputs writable.
#[no_mangle]
pub unsafe extern "C" fn lcu_norm(
    h: *const LcuHamiltonian,
    method: *const c_char,
    shift: bool,
    seed: u64,
    lambda: *mut f64,
    count: *mut i64,
) -> LcuStatus {
    guard(|| {
        let h = handle(h)?;
        let method: Method = lift(str_arg(method, "method")?.parse())?;
        if lambda.is_null() {
            return Err(null("lambda"));
        }
        let cfg = RunConfig {
            methods: vec![method],
            shift,
            seed,
            optimizer: OptimizerConfig { seed, ..Default::default() },
            ..Default::default()
        };
        let t = if shift { optimal_shift(&h.tensors).1 } else { h.tensors.clone() };
        let (entries, _) = lift(compute_norms(&t, &cfg, &DecompositionCache::disabled()))?;
        let e = &entries[0];
        *lambda = e.lambda;
        if !count.is_null() {
            *count = e.unitary_count.map_or(-1, |c| c as i64);
        }
        Ok(())
    })
}

/// Optimal shift coefficients of `Ne` and `Ne^2`.
///
/// # Safety
/// `h` must be a live handle and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn lcu_symmetry_shift(h: *const LcuHamiltonian, s1: *mut f64, s2: *mut f64) -> LcuStatus {
    guard(|| {
        let h = handle(h)?;
        if s1.is_null() || s2.is_null() {
            return Err(null("s1/s2"));
        }
        let (s, _) = optimal_shift(&h.tensors);
        *s1 = s.s1;
        *s2 = s.s2;
        Ok(())
    })
}

/// Lowest and highest eigenvalue over the whole Fock space, `e0` included.
///
/// # Safety
/// `h` must be a live handle and both outputs writable.
#[no_mangle]
pub unsafe extern "C" fn lcu_spectral_range(h: *const LcuHamiltonian, e_min: *mut f64, e_max: *mut f64) -> LcuStatus {
    guard(|| {
        let h = handle(h)?;
        if e_min.is_null() || e_max.is_null() {
            return Err(null("e_min/e_max"));
        }
        let r = lift(spectral_range(&h.tensors))?;
        *e_min = r.e_min;
        *e_max = r.e_max;
        Ok(())
    })
}

/// Full report as JSON. `methods` is a comma list as accepted by the CLI;
/// `interaction` selects the interaction-picture residual. The string in
/// `*json` must be released with `lcu_string_free`.
///
/// # Safety
/// `h` must be a live handle, `methods` NUL-terminated, `json` writable.
#[no_mangle]
pub unsafe extern "C" fn lcu_report_json(
    h: *const LcuHamiltonian,
    methods: *const c_char,
    shift: bool,
    interaction: bool,
    seed: u64,
    json: *mut *mut c_char,
) -> LcuStatus {
    guard(|| {
        let h = handle(h)?;
        if json.is_null() {
            return Err(null("json"));
        }
        let methods = lift(lcu_core::report::parse_methods(str_arg(methods, "methods")?))?;
        let cfg = RunConfig {
            methods,
            shift,
            picture: if interaction { Picture::Interaction } else { Picture::Schrodinger },
            seed,
            optimizer: OptimizerConfig { seed, ..Default::default() },
            ..Default::default()
        };
        let report = lift(run_tensors("hamiltonian", &h.tensors, &cfg, &DecompositionCache::from_env()))?;
        let text = lift(serde_json::to_string(&report).map_err(Error::from))?;
        *json = CString::new(text).map_err(|e| (LcuStatus::InvalidInput, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lcu_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
