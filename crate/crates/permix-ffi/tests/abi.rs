use std::ffi::{CStr, CString};
use std::ptr;

use permix_ffi::*;

const TWO_BERN: &str = r#"{"alphabet_size":2,"components":[[0.8,0.2],[0.2,0.8]]}"#;

fn load(json: &str) -> (PermixStatus, *mut PermixComponents) {
    let s = CString::new(json).unwrap();
    let mut h = ptr::null_mut();
    let st = unsafe { permix_components_from_json(s.as_ptr(), &mut h) };
    (st, h)
}

fn last_error() -> Option<String> {
    let p = permix_last_error_message();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { permix_string_free(p) };
    Some(s)
}

#[test]
fn golden_chi2_through_handle() {
    let (st, h) = load(TWO_BERN);
    assert_eq!(st, PermixStatus::Ok);
    assert!(last_error().is_none());
    let (mut n, mut k) = (0, 0);
    let (mut exact, mut brute, mut cap) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(permix_components_shape(h, &mut n, &mut k), PermixStatus::Ok);
        assert_eq!(permix_chi2_exact(h, &mut exact), PermixStatus::Ok);
        assert_eq!(permix_chi2_bruteforce(h, &mut brute), PermixStatus::Ok);
        assert_eq!(permix_instance_capacity(h, &mut cap), PermixStatus::Ok);
        permix_components_free(h);
    }
    assert_eq!((n, k), (2, 2));
    assert!((exact - 0.1296).abs() < 1e-10);
    assert!((brute - 0.1296).abs() < 1e-10);
    assert!((cap - 0.36).abs() < 1e-12);
}

#[test]
fn bounds_dominate_exact() {
    let (_, h) = load(r#"{"alphabet_size":3,"components":[[0.5,0.3,0.2],[0.2,0.5,0.3],[0.3,0.2,0.5]]}"#);
    let mut b = PermixBounds { exact_chi2: 0.0, ub1: 0.0, ub2: 0.0, ub3: 0.0, lower_spectral: 0.0 };
    unsafe {
        assert_eq!(permix_bounds_evaluate(h, &mut b), PermixStatus::Ok);
        permix_components_free(h);
    }
    assert!(b.lower_spectral >= 0.0);
    assert!(b.exact_chi2 <= b.ub1.min(b.ub2).min(b.ub3));
}

#[test]
fn scalar_bounds() {
    let mut b = PermixBounds { exact_chi2: 0.0, ub1: 0.0, ub2: 0.0, ub3: 0.0, lower_spectral: 0.0 };
    assert_eq!(unsafe { permix_main_bounds(2, 0.36, 1.5625, 0.36, &mut b) }, PermixStatus::Ok);
    assert!((b.ub1 - 1.296).abs() < 1e-12);
    assert!(b.exact_chi2.is_nan());
    assert_eq!(unsafe { permix_main_bounds(2, f64::NAN, 2.0, 1.0, &mut b) }, PermixStatus::Invalid);
    assert!(last_error().unwrap().contains("delta"));
}

#[test]
fn permanent_of_raw_matrix() {
    let m = [1.0, 2.0, 3.0, 4.0];
    let mut p = 0.0;
    assert_eq!(unsafe { permix_permanent(m.as_ptr(), 2, &mut p) }, PermixStatus::Ok);
    assert_eq!(p, 10.0);
    assert_eq!(unsafe { permix_permanent(ptr::null(), 2, &mut p) }, PermixStatus::NullPointer);
    assert_eq!(unsafe { permix_permanent(m.as_ptr(), 0, &mut p) }, PermixStatus::Invalid);
}

#[test]
fn error_codes_and_messages() {
    let (st, h) = load("{not json");
    assert_eq!(st, PermixStatus::Parse);
    assert!(h.is_null());
    assert!(last_error().unwrap().contains("component list"));

    let (st, _) = load(r#"{"alphabet_size":2,"components":[[0.7,0.7]]}"#);
    assert_eq!(st, PermixStatus::Invalid);

    let (st, _) = load(r#"{"alphabet_size":3,"components":[[0.5,0.5]]}"#);
    assert_eq!(st, PermixStatus::Dimension);

    let bytes = [0xffu8, 0];
    let mut h = ptr::null_mut();
    let st = unsafe { permix_components_from_json(bytes.as_ptr().cast(), &mut h) };
    assert_eq!(st, PermixStatus::InvalidUtf8);

    assert_eq!(unsafe { permix_components_from_json(ptr::null(), &mut h) }, PermixStatus::NullPointer);
    let mut x = 0.0;
    assert_eq!(unsafe { permix_chi2_exact(ptr::null(), &mut x) }, PermixStatus::NullPointer);

    let (_, h) = load(TWO_BERN);
    assert_eq!(unsafe { permix_chi2_exact(h, ptr::null_mut()) }, PermixStatus::NullPointer);
    assert_eq!(unsafe { permix_chi2_exact(h, &mut x) }, PermixStatus::Ok);
    assert!(last_error().is_none());
    unsafe { permix_components_free(h) };
}

#[test]
fn bruteforce_cap_is_reported() {
    let rows: Vec<String> = (0..14).map(|_| "[0.25,0.25,0.25,0.25]".to_string()).collect();
    let (_, h) = load(&format!(r#"{{"alphabet_size":4,"components":[{}]}}"#, rows.join(",")));
    let mut x = 0.0;
    assert_eq!(unsafe { permix_chi2_bruteforce(h, &mut x) }, PermixStatus::Cap);
    assert_eq!(unsafe { permix_chi2_exact(h, &mut x) }, PermixStatus::Ok);
    assert!(x.abs() < 1e-9);
    unsafe { permix_components_free(h) };
}

#[test]
fn free_accepts_null() {
    unsafe {
        permix_components_free(ptr::null_mut());
        permix_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(permix_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/permix.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for f in exports {
        assert!(header.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(header.contains("typedef struct PermixComponents PermixComponents;"));
}
