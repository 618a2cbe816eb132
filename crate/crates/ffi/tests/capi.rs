use std::ffi::{c_char, CStr};
use std::path::Path;
use std::process::Command;
use std::ptr;

use tilebesov_ffi::*;

fn dyadic() -> *mut TbTiling {
    let mut t = ptr::null_mut();
    let st = unsafe { tb_tiling_new([2i64].as_ptr(), 1, [0i64, 1].as_ptr(), 2, &mut t) };
    assert_eq!(st, TbStatus::Ok);
    t
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { tb_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn tiling_lifecycle() {
    let t = dyadic();
    let (mut n, mut m, mut lam) = (0usize, 0usize, 0.0f64);
    assert_eq!(unsafe { tb_tiling_info(t, &mut n, &mut m, &mut lam) }, TbStatus::Ok);
    assert_eq!((n, m, lam), (1, 2, 2.0));
    let mut count = 0usize;
    assert_eq!(unsafe { tb_tiling_points(t, 5, ptr::null_mut(), 0, &mut count) }, TbStatus::Ok);
    assert_eq!(count, 32);
    let mut small = vec![0.0; 8];
    assert_eq!(unsafe { tb_tiling_points(t, 5, small.as_mut_ptr(), small.len(), &mut count) }, TbStatus::BufferTooSmall);
    let mut pts = vec![0.0; 32];
    assert_eq!(unsafe { tb_tiling_points(t, 5, pts.as_mut_ptr(), pts.len(), &mut count) }, TbStatus::Ok);
    assert!(pts.iter().all(|p| (0.0..1.0).contains(p)));
    let mut digits = [9usize; 4];
    assert_eq!(unsafe { tb_tiling_locate(t, [1.0 / 3.0].as_ptr(), 4, digits.as_mut_ptr()) }, TbStatus::Ok);
    assert_eq!(digits, [0, 1, 0, 1]);
    unsafe { tb_tiling_free(t) };
}

#[test]
fn bad_digits_report_validation() {
    let mut t = ptr::null_mut();
    let st = unsafe { tb_tiling_new([2i64].as_ptr(), 1, [0i64, 2].as_ptr(), 2, &mut t) };
    assert_eq!(st, TbStatus::Validation);
    assert!(t.is_null());
    assert!(last_error().contains("congruent"));
    let st = unsafe { tb_tiling_new(ptr::null(), 1, [0i64, 1].as_ptr(), 2, &mut t) };
    assert_eq!(st, TbStatus::NullPointer);
}

#[test]
fn takagi_exponent_through_the_abi() {
    let t = dyadic();
    let mut f = ptr::null_mut();
    let st = unsafe { tb_function_builtin(t, c"takagi".as_ptr(), 0.5f64.sqrt(), 12, &mut f) };
    assert_eq!(st, TbStatus::Ok);
    let mut len = 0usize;
    assert_eq!(unsafe { tb_function_len(f, &mut len) }, TbStatus::Ok);
    assert_eq!(len, 4096);
    let (mut est, mut sat) = (0.0, true);
    let st = unsafe { tb_global_exponent(f, c"osc".as_ptr(), f64::INFINITY, 1, 3, 8, &mut est, &mut sat) };
    assert_eq!(st, TbStatus::Ok);
    assert!((est - 0.5).abs() < 0.05 && !sat, "{est}");
    let mut pw = 0.0;
    let st = unsafe { tb_pointwise_exponent(f, [0.3].as_ptr(), c"osc".as_ptr(), 2.0, 1, 4, 10, &mut pw) };
    assert_eq!(st, TbStatus::Ok);
    assert!((pw - 0.5).abs() < 0.1, "{pw}");
    let mut norm = 0.0;
    assert_eq!(unsafe { tb_besov_norm(f, 0.4, f64::INFINITY, f64::INFINITY, 10, &mut norm) }, TbStatus::Ok);
    assert!(norm.is_finite() && norm > 0.0);
    let st = unsafe { tb_global_exponent(f, c"bogus".as_ptr(), 2.0, 1, 4, 10, &mut est, ptr::null_mut()) };
    assert_eq!(st, TbStatus::Validation);
    let st = unsafe { tb_besov_norm(f, 2.5, 2.0, 2.0, 12, &mut norm) };
    assert_ne!(st, TbStatus::Ok);
    unsafe { tb_function_free(f) };
    unsafe { tb_tiling_free(t) };
}

#[test]
fn samples_round_trip_and_reject_nan() {
    let t = dyadic();
    let s: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { tb_function_from_samples(t, 4, s.as_ptr(), s.len(), &mut f) }, TbStatus::Ok);
    let mut back = vec![0.0; 16];
    assert_eq!(unsafe { tb_function_samples(f, back.as_mut_ptr(), back.len()) }, TbStatus::Ok);
    assert_eq!(back, s);
    unsafe { tb_function_free(f) };
    let mut bad = s.clone();
    bad[3] = f64::NAN;
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tb_function_from_samples(t, 4, bad.as_ptr(), bad.len(), &mut g) }, TbStatus::Validation);
    assert_eq!(unsafe { tb_function_from_samples(t, 4, s.as_ptr(), 15, &mut g) }, TbStatus::Validation);
    unsafe { tb_tiling_free(t) };
}

#[test]
fn header_declares_every_export_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/tilebesov.h")).unwrap();
    let src = std::fs::read_to_string(dir.join("src/lib.rs")).unwrap();
    for line in src.lines().filter(|l| l.contains("extern \"C\" fn tb_")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("use.c");
    std::fs::write(
        &c,
        "#include \"tilebesov.h\"\nint main(void) { TbTiling *t = 0; return tb_tiling_info(t, 0, 0, 0) == TB_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    if let Ok(status) = Command::new("cc").arg("-fsyntax-only").arg("-Wall").arg("-I").arg(dir.join("include")).arg(&c).status() {
        assert!(status.success());
    }
}
