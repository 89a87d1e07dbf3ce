use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use typlab_ffi::*;

fn family(spec: &str) -> *mut TyplabFamily {
    let s = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { typlab_family_new(s.as_ptr(), &mut f) },
        TyplabStatus::Ok
    );
    assert!(!f.is_null());
    f
}

fn last_error() -> String {
    let p = typlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn presets_and_json_specs() {
    let f = family("beta");
    let (mut lo, mut hi) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            typlab_family_param_interval(f, &mut lo, &mut hi),
            TyplabStatus::Ok
        );
        assert_eq!((lo, hi), (1.01, 4.0));
        let mut y = 0.0;
        assert_eq!(
            typlab_family_evaluate(f, 2.5, 0.5, &mut y),
            TyplabStatus::Ok
        );
        assert_eq!(y, 0.25);
        typlab_family_free(f);
    }
    let g = family(r#"{"kind": "markov", "param_interval": [0.2, 0.8]}"#);
    unsafe { typlab_family_free(g) };
}

#[test]
fn errors_are_reported() {
    let bad = CString::new(r#"{"kind": "markov", "param_interval": [0.2, 1.5]}"#).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(
        unsafe { typlab_family_new(bad.as_ptr(), &mut f) },
        TyplabStatus::InvalidSpec
    );
    assert!(f.is_null());
    assert!(!last_error().is_empty());

    let f = family("beta");
    let mut y = 0.0;
    assert_eq!(
        unsafe { typlab_family_evaluate(f, 9.0, 0.5, &mut y) },
        TyplabStatus::ParamOutOfRange
    );
    assert!(last_error().contains('9'));
    assert_eq!(
        unsafe { typlab_family_evaluate(f, 2.0, 0.5, ptr::null_mut()) },
        TyplabStatus::NullPointer
    );
    let mut buf = [0.0; 3];
    assert_eq!(
        unsafe { typlab_family_orbit(f, 2.5, 1.0, 0.0, 5, buf.as_mut_ptr(), ptr::null_mut(), 3) },
        TyplabStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { typlab_family_param_interval(ptr::null(), &mut y, &mut y) },
        TyplabStatus::NullPointer
    );
    unsafe { typlab_family_free(f) };
    unsafe { typlab_family_free(ptr::null_mut()) };
}

#[test]
fn orbit_and_transversality() {
    let f = family("beta");
    let (mut xs, mut ds) = ([0.0; 4], [0.0; 4]);
    unsafe {
        assert_eq!(
            typlab_family_orbit(f, 2.5, 1.0, 0.0, 3, xs.as_mut_ptr(), ds.as_mut_ptr(), 4),
            TyplabStatus::Ok
        );
        typlab_family_free(f);
    }
    assert_eq!(xs, [1.0, 0.5, 0.25, 0.625]);
    assert_eq!(ds, [0.0, 1.0, 3.0, 7.75]);

    let t = family("skewtent");
    let (mut l0, mut j0, mut d) = (0.0, 0i64, 0.0);
    unsafe {
        assert_eq!(
            typlab_transversality(t, 0.0, 20, &mut l0, &mut j0, &mut d),
            TyplabStatus::Ok
        );
        typlab_family_free(t);
    }
    assert_eq!((l0, j0, d), (1.0, 3, -3.0));
}

#[test]
fn density_round_trip() {
    let f = family("beta");
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(
            typlab_density_new(f, 2.0, 64, 1e-12, 1000, &mut d),
            TyplabStatus::Ok
        );
        assert_eq!(typlab_density_bins(d), 64);
        let mut v = vec![0.0; 64];
        let (mut lo, mut hi) = (0.0, 0.0);
        assert_eq!(
            typlab_density_values(d, v.as_mut_ptr(), 64, &mut lo, &mut hi),
            TyplabStatus::Ok
        );
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-10));
        assert_eq!((lo, hi), (0.0, 1.0));
        let samples = [0.5; 10];
        let mut k = 0.0;
        assert_eq!(
            typlab_kolmogorov_distance(d, samples.as_ptr(), 10, &mut k),
            TyplabStatus::Ok
        );
        assert!((k - 0.5).abs() < 1e-12);
        assert_eq!(
            typlab_kolmogorov_distance(d, samples.as_ptr(), 0, &mut k),
            TyplabStatus::AnalysisFailed
        );
        assert_eq!(
            typlab_density_new(f, 2.0, 1, 1e-12, 10, &mut d),
            TyplabStatus::InvalidArgument
        );
        assert!(d.is_null());
        typlab_density_free(d);
        typlab_family_free(f);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(typlab_version()) }
        .to_str()
        .unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/typlab.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "typlab_family_new",
        "typlab_density_values",
        "typlab_last_error",
        "TYPLAB_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", header])
        .output()
    else {
        eprintln!("no C compiler; syntax check skipped");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
