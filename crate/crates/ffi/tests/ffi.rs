use std::ffi::{c_char, CString};
use std::ptr;

use kwdual_ffi::*;

fn group(desc: &str) -> *mut KwGroup {
    let c = CString::new(desc).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { kw_group_parse(c.as_ptr(), &mut g) }, KwStatus::Ok);
    assert!(!g.is_null());
    g
}

fn torus(m: usize, n: usize) -> *mut KwLattice {
    let mut l = ptr::null_mut();
    assert_eq!(
        unsafe { kw_lattice_generate(KwLatticeKind::Torus, m, n, 0, &mut l) },
        KwStatus::Ok
    );
    l
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { kw_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn group_lifecycle() {
    let g = group("Z2xZ3");
    let mut order = 0usize;
    assert_eq!(unsafe { kw_group_order(g, &mut order) }, KwStatus::Ok);
    assert_eq!(order, 6);
    unsafe { kw_group_free(g) };
    unsafe { kw_group_free(ptr::null_mut()) };
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("nonsense").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { kw_group_parse(bad.as_ptr(), &mut g) }, KwStatus::InvalidInput);
    assert!(last_error().contains("nonsense"));
    assert_eq!(unsafe { kw_group_parse(ptr::null(), &mut g) }, KwStatus::NullPointer);
    let invalid = [0xffu8 as c_char, 0];
    assert_eq!(
        unsafe { kw_group_parse(invalid.as_ptr(), &mut g) },
        KwStatus::InvalidUtf8
    );

    let s3 = group("S3");
    let l = torus(2, 2);
    let theta = [1.0; 6];
    let (mut err, mut factor) = (0.0, 0.0);
    assert_eq!(
        unsafe { kw_kw_check(l, s3, theta.as_ptr(), 6, &mut err, &mut factor) },
        KwStatus::NotAbelian
    );
    let mut orders = [0u64; 3];
    assert_eq!(
        unsafe { kw_cohomology_orders(l, s3, orders.as_mut_ptr()) },
        KwStatus::NotAbelian
    );
    let mut ok = false;
    assert_eq!(
        unsafe { kw_is_admissible(s3, theta.as_ptr(), 5, &mut ok) },
        KwStatus::InvalidInput
    );
    unsafe {
        kw_group_free(s3);
        kw_lattice_free(l);
    }

    let mut l = ptr::null_mut();
    assert_eq!(
        unsafe { kw_lattice_generate(KwLatticeKind::Genus, 0, 0, 0, &mut l) },
        KwStatus::InvalidLattice
    );
}

#[test]
fn lattice_counts_and_json() {
    let l = torus(3, 2);
    let (mut v, mut e, mut f) = (0, 0, 0);
    assert_eq!(unsafe { kw_lattice_counts(l, &mut v, &mut e, &mut f) }, KwStatus::Ok);
    assert_eq!((v, e, f), (6, 12, 6));
    unsafe { kw_lattice_free(l) };

    let lattice = kwdual::surface::generate_lattice(kwdual::surface::LatticeKind::SphereCube).unwrap();
    let json = CString::new(serde_json_text(&lattice)).unwrap();
    let mut l = ptr::null_mut();
    assert_eq!(unsafe { kw_lattice_from_json(json.as_ptr(), &mut l) }, KwStatus::Ok);
    assert_eq!(unsafe { kw_lattice_counts(l, &mut v, &mut e, &mut f) }, KwStatus::Ok);
    assert_eq!((v, e, f), (8, 12, 6));
    unsafe { kw_lattice_free(l) };

    let broken = CString::new("{\"vertices\": ").unwrap();
    assert_eq!(
        unsafe { kw_lattice_from_json(broken.as_ptr(), &mut l) },
        KwStatus::InvalidInput
    );
}

fn serde_json_text(l: &kwdual::surface::Lattice2) -> String {
    serde_json::to_string(l).unwrap()
}

#[test]
fn fourier_and_admissibility() {
    let g = group("Z2");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (re, im) = ([1.0, 0.5], [0.0, 0.0]);
    let (mut ore, mut oim) = ([0.0; 2], [0.0; 2]);
    let st = unsafe { kw_fourier_abelian(g, re.as_ptr(), im.as_ptr(), 2, ore.as_mut_ptr(), oim.as_mut_ptr()) };
    assert_eq!(st, KwStatus::Ok);
    assert!((ore[0] - 1.5 * s).abs() < 1e-14 && (ore[1] - 0.5 * s).abs() < 1e-14);
    assert!(oim.iter().all(|x| x.abs() < 1e-14));

    let mut ok = false;
    assert_eq!(unsafe { kw_is_admissible(g, re.as_ptr(), 2, &mut ok) }, KwStatus::Ok);
    assert!(ok);
    let bad = [1.0, 1.5];
    assert_eq!(unsafe { kw_is_admissible(g, bad.as_ptr(), 2, &mut ok) }, KwStatus::Ok);
    assert!(!ok);
    unsafe { kw_group_free(g) };
}

#[test]
fn duality_and_cohomology() {
    let g = group("Z3");
    let l = torus(3, 3);
    let theta = [1.0, 0.3, 0.3];
    let (mut err, mut factor) = (1.0, 0.0);
    assert_eq!(
        unsafe { kw_kw_check(l, g, theta.as_ptr(), 3, &mut err, &mut factor) },
        KwStatus::Ok
    );
    assert!(err < 1e-10, "relative error {err}");
    assert!((factor - 1.0).abs() < 1e-12);
    let mut orders = [0u64; 3];
    assert_eq!(unsafe { kw_cohomology_orders(l, g, orders.as_mut_ptr()) }, KwStatus::Ok);
    assert_eq!(orders, [3, 9, 3]);
    unsafe {
        kw_lattice_free(l);
        kw_group_free(g);
    }
}

#[test]
fn header_declares_every_function() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/kwdual.h")).unwrap();
    for name in [
        "kw_last_error_message",
        "kw_group_parse",
        "kw_group_order",
        "kw_group_free",
        "kw_lattice_generate",
        "kw_lattice_from_json",
        "kw_lattice_counts",
        "kw_lattice_free",
        "kw_fourier_abelian",
        "kw_is_admissible",
        "kw_kw_check",
        "kw_cohomology_orders",
        "KW_STATUS_CAP_EXCEEDED",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
