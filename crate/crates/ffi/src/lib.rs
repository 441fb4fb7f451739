//! C ABI for the nemvis library: opaque handles, integer status codes, and
//! a thread-local last-error message.
//!
//! Ownership rules: every `*_new`/`*_read`/`*_generate` output must be
//! released with the matching `*_free`. All paths and strings are NUL
//! terminated UTF-8. Functions returning `int32_t` return `NEMVIS_OK` (0) on
//! success; on failure they return a nonzero status and record a message
//! retrievable with `nemvis_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use nemvis::field::TensorField;
use nemvis::pipeline::{
    generate, run_pipeline, GenCase, GenParams, PipelineParams,
};
use nemvis::render::io::{read_field, write_field, write_template};
use nemvis::render::polydata::write_polydata;
use nemvis::render::svg::write_svg;
use nemvis::topology::detect_defects;

/// Status codes returned by every fallible function.
#[repr(i32)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NemvisStatus {
    Ok = 0,
    /// null pointer, bad enum value, or out-of-range parameter
    InvalidArgument = 1,
    /// input file failed to parse
    ParseError = 2,
    /// filesystem error
    IoError = 3,
    /// numerical failure (divergence, empty template, ...)
    ComputeError = 4,
}

/// Opaque tensor-field handle.
pub struct NemvisField {
    inner: TensorField,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &nemvis::Error) -> NemvisStatus {
    match err {
        nemvis::Error::InvalidParams(_) => NemvisStatus::InvalidArgument,
        nemvis::Error::Parse { .. } | nemvis::Error::Json(_) => NemvisStatus::ParseError,
        nemvis::Error::Io { .. } => NemvisStatus::IoError,
        _ => NemvisStatus::ComputeError,
    }
}

fn fail(err: &nemvis::Error) -> i32 {
    set_error(&err.to_string());
    status_of(err) as i32
}

fn invalid(msg: &str) -> i32 {
    set_error(msg);
    NemvisStatus::InvalidArgument as i32
}

/// # Safety
/// `path` must be a valid NUL-terminated string.
unsafe fn path_arg<'a>(path: *const c_char, what: &str) -> Result<&'a Path, i32> {
    if path.is_null() {
        return Err(invalid(&format!("{what} path is null")));
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(invalid(&format!("{what} path is not valid UTF-8"))),
    }
}

/// Copy the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len` bytes). Returns the full message length in bytes,
/// excluding the terminator. Passing a null or empty buffer just queries the
/// length.
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nemvis_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Scenario identifiers for `nemvis_field_generate`.
pub const NEMVIS_CASE_UNIFORM_CIRCLE: i32 = 0;
pub const NEMVIS_CASE_TWO_DEFECT_CIRCLE: i32 = 1;
pub const NEMVIS_CASE_MANY_DEFECT_SQUARE: i32 = 2;

/// Generate a built-in test field. `ln <= 0`, `steps < 0`, and
/// `prng_seed < 0` select the per-scenario defaults. On success `*out` owns
/// a new field handle.
/// # Safety
/// `out` must be null or a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_generate(
    case_id: i32,
    nx: usize,
    ny: usize,
    ln: f64,
    steps: i64,
    prng_seed: i64,
    out: *mut *mut NemvisField,
) -> i32 {
    if out.is_null() {
        return invalid("output handle pointer is null");
    }
    let case = match case_id {
        NEMVIS_CASE_UNIFORM_CIRCLE => GenCase::UniformCircle,
        NEMVIS_CASE_TWO_DEFECT_CIRCLE => GenCase::TwoDefectCircle,
        NEMVIS_CASE_MANY_DEFECT_SQUARE => GenCase::ManyDefectSquare,
        _ => return invalid("unknown scenario id"),
    };
    let params = GenParams {
        case,
        nx,
        ny,
        ln: (ln > 0.0).then_some(ln),
        steps: (steps >= 0).then_some(steps as usize),
        prng_seed: (prng_seed >= 0).then_some(prng_seed as u64),
    };
    match generate(&params) {
        Ok((field, _)) => {
            *out = Box::into_raw(Box::new(NemvisField { inner: field }));
            NemvisStatus::Ok as i32
        }
        Err(e) => fail(&e),
    }
}

/// Read a .qtf field file. On success `*out` owns a new field handle.
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be null or a
/// valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_read(
    path: *const c_char,
    out: *mut *mut NemvisField,
) -> i32 {
    if out.is_null() {
        return invalid("output handle pointer is null");
    }
    let path = match path_arg(path, "input") {
        Ok(p) => p,
        Err(code) => return code,
    };
    match read_field(path) {
        Ok(field) => {
            *out = Box::into_raw(Box::new(NemvisField { inner: field }));
            NemvisStatus::Ok as i32
        }
        Err(e) => fail(&e),
    }
}

/// Write a field to a .qtf file (atomic write).
/// # Safety
/// `field` must be null or a live handle; `path` must be a valid
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_write(
    field: *const NemvisField,
    path: *const c_char,
) -> i32 {
    let Some(field) = field.as_ref() else {
        return invalid("field handle is null");
    };
    let path = match path_arg(path, "output") {
        Ok(p) => p,
        Err(code) => return code,
    };
    match write_field(&field.inner, path) {
        Ok(()) => NemvisStatus::Ok as i32,
        Err(e) => fail(&e),
    }
}

/// Grid dimensions and spacing of a field. Any output pointer may be null.
/// # Safety
/// `field` must be null or a live handle; each output pointer must be null
/// or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_dims(
    field: *const NemvisField,
    nx: *mut usize,
    ny: *mut usize,
    dx: *mut f64,
    dy: *mut f64,
) -> i32 {
    let Some(field) = field.as_ref() else {
        return invalid("field handle is null");
    };
    let g = field.inner.grid;
    if !nx.is_null() {
        *nx = g.nx;
    }
    if !ny.is_null() {
        *ny = g.ny;
    }
    if !dx.is_null() {
        *dx = g.dx;
    }
    if !dy.is_null() {
        *dy = g.dy;
    }
    NemvisStatus::Ok as i32
}

/// Number of defects detected at the given planar-anisotropy threshold
/// (`threshold <= 0` selects the calibrated default).
/// # Safety
/// `field` must be null or a live handle; `out` must be null or valid for
/// a write.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_defect_count(
    field: *const NemvisField,
    threshold: f64,
    out: *mut usize,
) -> i32 {
    let Some(field) = field.as_ref() else {
        return invalid("field handle is null");
    };
    if out.is_null() {
        return invalid("output pointer is null");
    }
    let t = if threshold > 0.0 {
        threshold
    } else {
        nemvis::topology::DEFAULT_CP_THRESHOLD
    };
    match detect_defects(&field.inner, t) {
        Ok(sites) => {
            *out = sites.len();
            NemvisStatus::Ok as i32
        }
        Err(e) => fail(&e),
    }
}

/// Release a field handle. Accepts null.
/// # Safety
/// `field` must be null or a handle returned by this library that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn nemvis_field_free(field: *mut NemvisField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Run the full seeding + tracing pipeline at spacing `ls` and write the
/// requested outputs. Each of `svg_path`, `polydata_path`, and
/// `template_path` may be null to skip that output.
/// # Safety
/// `field` must be null or a live handle; each path must be null or a
/// valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nemvis_render(
    field: *const NemvisField,
    ls: f64,
    svg_path: *const c_char,
    polydata_path: *const c_char,
    template_path: *const c_char,
) -> i32 {
    let Some(field) = field.as_ref() else {
        return invalid("field handle is null");
    };
    if !(ls > 0.0 && ls.is_finite()) {
        return invalid("ls must be positive and finite");
    }
    let p = PipelineParams::new(ls);
    let scene = match run_pipeline(&field.inner, &p) {
        Ok(scene) => scene,
        Err(e) => return fail(&e),
    };
    if !svg_path.is_null() {
        let path = match path_arg(svg_path, "svg") {
            Ok(p) => p,
            Err(code) => return code,
        };
        if let Err(e) = write_svg(&scene, path) {
            return fail(&e);
        }
    }
    if !polydata_path.is_null() {
        let path = match path_arg(polydata_path, "polydata") {
            Ok(p) => p,
            Err(code) => return code,
        };
        if let Err(e) = write_polydata(&scene, path) {
            return fail(&e);
        }
    }
    if !template_path.is_null() {
        let path = match path_arg(template_path, "template") {
            Ok(p) => p,
            Err(code) => return code,
        };
        if let Err(e) = write_template(&scene.template, &scene.seeds, path) {
            return fail(&e);
        }
    }
    NemvisStatus::Ok as i32
}
