use std::ffi::{CStr, CString};
use std::ptr;

use specvar_ffi::*;

const DIRAC: &str =
    r#"{"domain":"disk","components":[{"kind":"atom","params":{"re":0.0},"mass":1.0}]}"#;
const MIXED: &str = r#"{"domain":"disk","components":[
    {"kind":"atom","params":{"re":0.5},"mass":0.5},
    {"kind":"uniform","params":{"a":-0.5,"b":0.5},"mass":0.5}]}"#;

fn measure(json: &str) -> *mut SpecvarMeasure {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    let s = unsafe { specvar_measure_from_json(text.as_ptr(), &mut m) };
    assert_eq!(s, SpecvarStatus::Ok, "{}", last_error());
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = specvar_last_error();
    if p.is_null() {
        return String::new();
    }
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dirac_at_origin() {
    let m = measure(DIRAC);
    let mut x = f64::NAN;
    unsafe {
        assert_eq!(specvar_total_mass(m, &mut x), SpecvarStatus::Ok);
        assert_eq!(x, 1.0);
        assert_eq!(specvar_covariance(m, 3, &mut x), SpecvarStatus::Ok);
        assert_eq!(x, 0.0);
        assert_eq!(specvar_sigma_squared(m, &mut x), SpecvarStatus::Ok);
        assert!((x - 1.0).abs() < 1e-12);
        assert_eq!(
            specvar_variance(m, 50, SpecvarVarianceMethod::All, &mut x),
            SpecvarStatus::Ok
        );
        assert!((x - 50.0).abs() < 1e-9);
        let mut g = std::mem::zeroed::<SpecvarGrowth>();
        assert_eq!(specvar_classify_growth(m, 4096, &mut g), SpecvarStatus::Ok);
        assert_eq!(g.verdict, SpecvarVerdict::Linear);
        assert!((g.parameter - 1.0).abs() < 1e-9);
        specvar_measure_free(m);
    }
}

#[test]
fn routes_agree_through_ffi() {
    let m = measure(MIXED);
    let mut vals = Vec::new();
    for method in [
        SpecvarVarianceMethod::CovarianceSum,
        SpecvarVarianceMethod::Kernel,
        SpecvarVarianceMethod::Martingale,
    ] {
        let mut x = 0.0;
        assert_eq!(
            unsafe { specvar_variance(m, 40, method, &mut x) },
            SpecvarStatus::Ok
        );
        vals.push(x);
    }
    assert!((vals[0] - vals[1]).abs() < 1e-9 * vals[0]);
    assert!((vals[0] - vals[2]).abs() < 1e-9 * vals[0]);
    unsafe { specvar_measure_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut m = ptr::null_mut();
    let bad =
        CString::new(r#"{"domain":"disk","components":[{"kind":"blob","mass":1.0}]}"#).unwrap();
    let s = unsafe { specvar_measure_from_json(bad.as_ptr(), &mut m) };
    assert_ne!(s, SpecvarStatus::Ok);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let s = unsafe { specvar_measure_from_json(ptr::null(), &mut m) };
    assert_eq!(s, SpecvarStatus::NullPointer);
    assert!(last_error().contains("json"));

    let mut x = 0.0;
    assert_eq!(
        unsafe { specvar_total_mass(ptr::null(), &mut x) },
        SpecvarStatus::NullPointer
    );

    let m = measure(
        r#"{"domain":"disk","components":[{"kind":"power-law","params":{"gamma":0.5},"mass":1.0}]}"#,
    );
    assert_eq!(
        unsafe { specvar_sigma_squared(m, &mut x) },
        SpecvarStatus::Ok
    );
    assert!(x.is_infinite());
    unsafe {
        specvar_measure_free(m);
        specvar_measure_free(ptr::null_mut());
    }
}

#[test]
fn chain_handle() {
    let spec = CString::new(r#"{"family":"triangular"}"#).unwrap();
    let mut c = ptr::null_mut();
    assert_eq!(
        unsafe { specvar_chain_from_json(spec.as_ptr(), &mut c) },
        SpecvarStatus::Ok,
        "{}",
        last_error()
    );
    let mut theta = 0.0;
    assert_eq!(
        unsafe { specvar_chain_theta(c, &mut theta) },
        SpecvarStatus::Ok
    );
    assert!(theta.is_finite() && theta > 1.0);
    let mut a = unsafe { std::mem::zeroed::<SpecvarClt>() };
    let mut b = a;
    unsafe {
        assert_eq!(
            specvar_chain_clt(c, 5000, 100, 9, &mut a),
            SpecvarStatus::Ok
        );
        assert_eq!(
            specvar_chain_clt(c, 5000, 100, 9, &mut b),
            SpecvarStatus::Ok
        );
        specvar_chain_free(c);
    }
    assert_eq!(a, b);
    assert!(a.ks >= 0.0 && a.ks <= 1.0);

    let bad = CString::new(r#"{"family":"hexagonal"}"#).unwrap();
    let s = unsafe { specvar_chain_from_json(bad.as_ptr(), &mut c) };
    assert_ne!(s, SpecvarStatus::Ok);
    assert!(c.is_null());
}

#[test]
fn run_config_writes_summary() {
    let dir = tempfile::TempDir::new().unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let cmd = CString::new("classify").unwrap();
    let cfg = CString::new(format!(
        r#"{{"measure":{DIRAC},"n":4096,"expect":"regular"}}"#
    ))
    .unwrap();
    let mut code = -1;
    let s = unsafe { specvar_run_config(cmd.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut code) };
    assert_eq!(s, SpecvarStatus::Ok, "{}", last_error());
    assert_eq!(code, 3);
    assert!(dir.path().join("summary.json").exists());

    let unknown = CString::new("frobnicate").unwrap();
    let s = unsafe { specvar_run_config(unknown.as_ptr(), cfg.as_ptr(), out.as_ptr(), &mut code) };
    assert_eq!(s, SpecvarStatus::Config);
}

#[test]
fn header_lists_every_export() {
    let h =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/specvar.h")).unwrap();
    for f in [
        "specvar_last_error",
        "specvar_version",
        "specvar_measure_from_json",
        "specvar_measure_free",
        "specvar_variance",
        "specvar_classify_growth",
        "specvar_chain_clt",
        "specvar_run_config",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    let v = unsafe { CStr::from_ptr(specvar_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
