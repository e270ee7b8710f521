use std::ffi::CStr;
use std::ptr;

use critsense_ffi::*;

fn last_error() -> String {
    let p = cs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn probe(length: usize, bx: f64, bz: f64) -> *mut CsProbe {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { cs_probe_new(length, 1.0, bx, bz, &mut p) }, CsStatus::CsOk);
    assert!(!p.is_null());
    p
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(cs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn probe_lifecycle_and_qfi() {
    let p = probe(8, 0.0, 0.0);
    let mut f = [0.0; 4];
    assert_eq!(unsafe { cs_qfi_matrix(p, 0.3, 0.4, f.as_mut_ptr()) }, CsStatus::CsOk);
    assert!(f[0] > 0.0 && f[3] > 0.0 && (f[1] - f[2]).abs() <= 1e-10 * f[0]);
    let mut c = [0.0; 4];
    let mut excluded = -1.0;
    assert_eq!(unsafe { cs_cfi_matrix(p, 0.3, 0.4, 1e-4, c.as_mut_ptr(), &mut excluded) }, CsStatus::CsOk);
    assert!(c[3] <= f[3] * (1.0 + 1e-6));
    assert!(excluded >= 0.0);
    let (mut e, mut gap) = (0.0, 0.0);
    assert_eq!(unsafe { cs_ground_energy(p, 0.3, 0.4, &mut e, &mut gap) }, CsStatus::CsOk);
    assert!(e < 0.0 && gap > 0.0);
    assert_eq!(unsafe { cs_probe_set_control(p, 0.1, 0.2) }, CsStatus::CsOk);
    let mut g = 0.0;
    assert_eq!(unsafe { cs_g_multi(p, 0.2, 0.2, 0.0, 0.0, 0, &mut g) }, CsStatus::CsOk);
    let mut f2 = [0.0; 4];
    assert_eq!(unsafe { cs_qfi_matrix(p, 0.2, 0.2, f2.as_mut_ptr()) }, CsStatus::CsOk);
    // shift covariance: total fields are equal
    for (a, b) in f.iter().zip(&f2) {
        assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
    }
    let det = f[0] * f[3] - f[1] * f[2];
    assert!((g - (f[0] + f[3]) / det).abs() <= 1e-8 * g);
    unsafe { cs_probe_free(p) };
    unsafe { cs_probe_free(ptr::null_mut()) };
}

#[test]
fn errors_are_reported() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { cs_probe_new(1, 1.0, 0.0, 0.0, &mut p) }, CsStatus::CsInvalidInput);
    assert!(p.is_null());
    assert!(last_error().contains("length"));
    assert_eq!(unsafe { cs_probe_new(4, 1.0, 0.0, 0.0, ptr::null_mut()) }, CsStatus::CsNullPointer);

    let p = probe(2, 0.0, 0.0);
    let mut f = [0.0; 4];
    assert_eq!(unsafe { cs_qfi_matrix(p, 0.0, 0.0, f.as_mut_ptr()) }, CsStatus::CsDegenerate);
    assert!(last_error().contains("degenerate"));
    assert_eq!(unsafe { cs_qfi_matrix(p, 0.0, 1.0, f.as_mut_ptr()) }, CsStatus::CsOk);
    assert!(cs_last_error().is_null());
    unsafe { cs_probe_free(p) };
}

#[test]
fn free_fermion_entry_points() {
    let mut q = 0.0;
    assert_eq!(unsafe { cs_ff_qfi(100, 1.0, 1.0, 1e-4, &mut q) }, CsStatus::CsOk);
    assert!(q > 100.0);
    assert_eq!(unsafe { cs_ff_qfi(101, 1.0, 1.0, 1e-4, &mut q) }, CsStatus::CsInvalidInput);
    let mut g = 0.0;
    assert_eq!(unsafe { cs_ff_g_single(100, 1.0, 0.0, 1.0, 0.0, 0, &mut g) }, CsStatus::CsOk);
    let mut q2 = 0.0;
    unsafe { cs_ff_qfi(100, 1.0, 1.0, 1e-4, &mut q2) };
    assert!((g - 1.0 / q2).abs() <= 1e-12 * g);
}
