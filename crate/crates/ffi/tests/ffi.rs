//! Exercises the C ABI through the exported extern "C" functions, including
//! error paths and the last-error buffer.

use std::ffi::CString;
use std::os::raw::c_char;
use std::ptr;

use nemvis_ffi::*;

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { nemvis_last_error(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(buf.len() - 1));
    String::from_utf8(buf).unwrap()
}

#[test]
fn generate_write_read_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let qtf = c_path(&dir.path().join("f.qtf"));

    let mut field: *mut NemvisField = ptr::null_mut();
    let rc = unsafe {
        nemvis_field_generate(NEMVIS_CASE_UNIFORM_CIRCLE, 64, 64, -1.0, -1, -1, &mut field)
    };
    assert_eq!(rc, NemvisStatus::Ok as i32, "{}", last_error());
    assert!(!field.is_null());

    let (mut nx, mut ny, mut dx, mut dy) = (0usize, 0usize, 0f64, 0f64);
    let rc = unsafe { nemvis_field_dims(field, &mut nx, &mut ny, &mut dx, &mut dy) };
    assert_eq!(rc, 0);
    assert_eq!((nx, ny), (64, 64));
    assert!(dx > 0.0 && dy > 0.0);

    assert_eq!(unsafe { nemvis_field_write(field, qtf.as_ptr()) }, 0);

    let mut back: *mut NemvisField = ptr::null_mut();
    assert_eq!(unsafe { nemvis_field_read(qtf.as_ptr(), &mut back) }, 0);
    let mut nx2 = 0usize;
    unsafe {
        nemvis_field_dims(back, &mut nx2, ptr::null_mut(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(nx2, 64);

    unsafe {
        nemvis_field_free(field);
        nemvis_field_free(back);
    }
}

#[test]
fn render_produces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = c_path(&dir.path().join("o.svg"));
    let vtk = c_path(&dir.path().join("o.vtk"));
    let json = c_path(&dir.path().join("o.json"));

    let mut field: *mut NemvisField = ptr::null_mut();
    let rc = unsafe {
        nemvis_field_generate(
            NEMVIS_CASE_TWO_DEFECT_CIRCLE,
            128,
            128,
            -1.0,
            100,
            -1,
            &mut field,
        )
    };
    assert_eq!(rc, 0, "{}", last_error());

    let mut count = 0usize;
    assert_eq!(
        unsafe { nemvis_field_defect_count(field, -1.0, &mut count) },
        0
    );
    assert_eq!(count, 2);

    let rc = unsafe {
        nemvis_render(field, 0.04, svg.as_ptr(), vtk.as_ptr(), json.as_ptr())
    };
    assert_eq!(rc, 0, "{}", last_error());
    for p in [&svg, &json, &vtk] {
        let path = std::path::Path::new(p.to_str().unwrap());
        assert!(path.exists() && path.metadata().unwrap().len() > 0);
    }
    unsafe { nemvis_field_free(field) };
}

#[test]
fn error_paths_set_status_and_message() {
    // null output pointer
    let rc = unsafe {
        nemvis_field_generate(NEMVIS_CASE_UNIFORM_CIRCLE, 8, 8, -1.0, -1, -1, ptr::null_mut())
    };
    assert_eq!(rc, NemvisStatus::InvalidArgument as i32);
    assert!(last_error().contains("null"));

    // unknown scenario
    let mut field: *mut NemvisField = ptr::null_mut();
    let rc = unsafe { nemvis_field_generate(99, 8, 8, -1.0, -1, -1, &mut field) };
    assert_eq!(rc, NemvisStatus::InvalidArgument as i32);

    // missing file
    let missing = CString::new("/definitely/not/here.qtf").unwrap();
    let rc = unsafe { nemvis_field_read(missing.as_ptr(), &mut field) };
    assert_eq!(rc, NemvisStatus::IoError as i32);
    assert!(!last_error().is_empty());

    // malformed file
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.qtf");
    std::fs::write(&bad, "not a field\n").unwrap();
    let cbad = c_path(&bad);
    let rc = unsafe { nemvis_field_read(cbad.as_ptr(), &mut field) };
    assert_eq!(rc, NemvisStatus::ParseError as i32);
    assert!(last_error().contains("line 1"));

    // bad ls on a valid field
    let mut f: *mut NemvisField = ptr::null_mut();
    assert_eq!(
        unsafe {
            nemvis_field_generate(NEMVIS_CASE_UNIFORM_CIRCLE, 32, 32, -1.0, -1, -1, &mut f)
        },
        0
    );
    let rc = unsafe { nemvis_render(f, 0.0, ptr::null(), ptr::null(), ptr::null()) };
    assert_eq!(rc, NemvisStatus::InvalidArgument as i32);
    unsafe { nemvis_field_free(f) };

    // free(null) is a no-op
    unsafe { nemvis_field_free(ptr::null_mut()) };
}

#[test]
fn last_error_buffer_truncates() {
    let missing = CString::new("/nope/nope/nope.qtf").unwrap();
    let mut field: *mut NemvisField = ptr::null_mut();
    unsafe { nemvis_field_read(missing.as_ptr(), &mut field) };
    let full = unsafe { nemvis_last_error(ptr::null_mut(), 0) };
    assert!(full > 4);
    let mut small = vec![0u8; 5];
    let n = unsafe { nemvis_last_error(small.as_mut_ptr() as *mut c_char, small.len()) };
    assert_eq!(n, full);
    assert_eq!(small[4], 0); // NUL terminated after truncation
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/nemvis.h"),
    )
    .unwrap();
    for symbol in [
        "nemvis_last_error",
        "nemvis_field_generate",
        "nemvis_field_read",
        "nemvis_field_write",
        "nemvis_field_dims",
        "nemvis_field_defect_count",
        "nemvis_field_free",
        "nemvis_render",
    ] {
        assert!(header.contains(symbol), "header is missing {symbol}");
    }
}
