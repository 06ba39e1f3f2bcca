use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use distlab_ffi::*;

fn last_error() -> String {
    let p = dl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn from_coords(lattice: &str, coords: &[i64]) -> (DlStatus, *mut DlPointSet) {
    let label = CString::new(lattice).unwrap();
    let mut set = ptr::null_mut();
    let st = unsafe { dl_pointset_from_coords(label.as_ptr(), coords.as_ptr(), coords.len() / 2, &mut set) };
    (st, set)
}

#[test]
fn unit_square_spectrum_through_the_abi() {
    let (st, set) = from_coords("Z2", &[0, 0, 1, 0, 0, 1, 1, 1, 1, 1]);
    assert_eq!(st, DlStatus::Ok);
    assert!(dl_last_error_message().is_null());
    unsafe {
        assert_eq!(dl_pointset_len(set), 4);
        let mut spec = ptr::null_mut();
        assert_eq!(dl_spectrum_compute(set, &mut spec), DlStatus::Ok);
        assert_eq!(dl_spectrum_len(spec), 2);
        let mut got = Vec::new();
        for i in 0..2 {
            let (mut key, mut m) = (0, 0);
            assert_eq!(dl_spectrum_entry(spec, i, &mut key, &mut m), DlStatus::Ok);
            got.push((key, m));
        }
        assert_eq!(got, vec![(1, 8), (2, 4)]);
        let (mut key, mut m) = (0, 0);
        assert_eq!(dl_spectrum_entry(spec, 2, &mut key, &mut m), DlStatus::Precondition);
        assert!(last_error().contains("out of range"));

        let mut e = 0;
        assert_eq!(dl_additive_energy(set, &mut e), DlStatus::Ok);
        assert_eq!(e, 36);
        dl_spectrum_free(spec);
        dl_pointset_free(set);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let (st, set) = from_coords("Z2", &[5, 5]);
    assert_eq!(st, DlStatus::Ok);
    let mut spec = ptr::null_mut();
    assert_eq!(unsafe { dl_spectrum_compute(set, &mut spec) }, DlStatus::Precondition);
    assert!(last_error().starts_with("precondition"));
    unsafe { dl_pointset_free(set) };

    let (st, _) = from_coords("nope", &[0, 0]);
    assert_ne!(st, DlStatus::Ok);

    let bad = CString::new("{\"lattice\": \"Z2\", \"points\": [[0,0],]}").unwrap();
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { dl_pointset_from_json(bad.as_ptr(), &mut set) }, DlStatus::Parse);
    assert!(set.is_null());

    assert_eq!(unsafe { dl_pointset_from_json(ptr::null(), &mut set) }, DlStatus::NullArgument);
    assert_eq!(unsafe { dl_spectrum_compute(ptr::null(), &mut spec) }, DlStatus::NullArgument);
    unsafe {
        dl_pointset_free(ptr::null_mut());
        dl_spectrum_free(ptr::null_mut());
        dl_string_free(ptr::null_mut());
    }
}

#[test]
fn classify_and_verify_round_trip() {
    let coords: Vec<i64> = (0..12).flat_map(|i| (0..12).flat_map(move |j| [i, j])).collect();
    let (st, set) = from_coords("Z2", &coords);
    assert_eq!(st, DlStatus::Ok);
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(dl_classify_json(set, ptr::null(), &mut out), DlStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        dl_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["outcome"]["kind"], "TwoShift");

        let report = CString::new(text.clone()).unwrap();
        assert_eq!(dl_verify_report_json(report.as_ptr()), DlStatus::Ok);
        let tampered = CString::new(text.replacen("\"n\":144", "\"n\":140", 1)).unwrap();
        assert_eq!(dl_verify_report_json(tampered.as_ptr()), DlStatus::CheckFailed);

        let config = CString::new(r#"{"sigma": 0.25, "c_line": 0.1, "c_shift": 0.1, "alpha_energy": 0.1, "bogus": 1}"#).unwrap();
        assert_eq!(dl_classify_json(set, config.as_ptr(), &mut out), DlStatus::Parse);
        dl_pointset_free(set);
    }
}

#[test]
fn version_is_the_crate_version() {
    assert_eq!(unsafe { CStr::from_ptr(dl_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/distlab.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["dl_pointset_from_json", "dl_spectrum_entry", "dl_classify_json", "dl_string_free", "DL_STATUS_CHECK_FAILED"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ DlPointSet *s = 0; int64_t c[2] = {{0, 0}};\n\
             DlStatus st = dl_pointset_from_coords(\"Z2\", c, 1, &s); dl_pointset_free(s); return st == DL_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let Ok(status) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() else {
        eprintln!("no C compiler; header syntax not checked");
        return;
    };
    assert!(status.success());
}
