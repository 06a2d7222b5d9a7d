use std::ffi::{CStr, CString};
use std::ptr;

use wpursuit_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(wp_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn data(values: &[f64], n: usize, p: usize) -> *mut WpData {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wp_data_new(values.as_ptr(), n, p, &mut h) }, WpStatus::Ok);
    h
}

fn model(spec: &str) -> *mut WpModel {
    let spec = CString::new(spec).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { wp_model_new(spec.as_ptr(), &mut h) };
    assert_eq!(s, WpStatus::Ok, "{}", last_error());
    h
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(wp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn data_round_trip() {
    let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let h = data(&values, 3, 2);
    let (mut n, mut p) = (0, 0);
    unsafe {
        assert_eq!(wp_data_dims(h, &mut n, &mut p), WpStatus::Ok);
        assert_eq!((n, p), (3, 2));
        let mut back = [0.0; 6];
        assert_eq!(wp_data_values(h, back.as_mut_ptr()), WpStatus::Ok);
        assert_eq!(back, values);
        wp_data_free(h);
        wp_data_free(ptr::null_mut());
    }
}

#[test]
fn null_pointers_are_reported() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(wp_w2_to_std_normal(ptr::null(), 3, &mut out), WpStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(wp_data_dims(ptr::null(), ptr::null_mut(), ptr::null_mut()), WpStatus::NullPointer);
        let mut h = ptr::null_mut();
        assert_eq!(wp_model_new(ptr::null(), &mut h), WpStatus::NullPointer);
        assert!(h.is_null());
    }
}

#[test]
fn success_clears_the_error_message() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(wp_w2_to_std_normal(ptr::null(), 1, &mut out), WpStatus::NullPointer);
        assert!(!last_error().is_empty());
        let zeros = [0.0; 10];
        assert_eq!(wp_w2_to_std_normal(zeros.as_ptr(), 10, &mut out), WpStatus::Ok);
    }
    assert!(last_error().is_empty());
    assert!((out - 1.0).abs() < 1e-9);
}

#[test]
fn library_errors_map_to_status_codes() {
    let mut out = 0.0;
    let h = data(&[1.0, 2.0, 3.0, 4.0], 2, 2);
    unsafe {
        assert_eq!(wp_w2_to_std_normal([0.0; 1].as_ptr(), 0, &mut out), WpStatus::Domain);
        let u = [1.0, 0.0, 0.0];
        assert_eq!(wp_objective(h, u.as_ptr(), 3, &mut out), WpStatus::DimensionMismatch);
        assert!(last_error().contains('3'), "{}", last_error());
        let mut w = ptr::null_mut();
        assert_eq!(wp_data_whiten(h, &mut w), WpStatus::Numerical);
        let bad = CString::new("[optimizer]\nrestarts = -1\n").unwrap();
        let mut dir = [0.0; 2];
        assert_eq!(wp_maximize(h, bad.as_ptr(), dir.as_mut_ptr(), &mut out), WpStatus::Parse);
        let unknown = CString::new("[stopping]\nbogus = 1\n").unwrap();
        let mut r = ptr::null_mut();
        assert_eq!(wp_recover(h, unknown.as_ptr(), &mut r), WpStatus::Parse);
        assert!(last_error().contains("bogus"));
        wp_data_free(h);
    }
    let spec = CString::new("p = 2\nk = 3\n[signal]\nkind = \"uniform\"\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { wp_model_new(spec.as_ptr(), &mut m) }, WpStatus::InvalidConfig);
}

#[test]
fn objective_matches_the_scalar_distance() {
    let values = [0.5, -1.0, 2.0, 0.0, -0.3, 1.1];
    let h = data(&values, 3, 2);
    let u = [0.6, 0.8];
    let proj: Vec<f64> = values.chunks(2).map(|r| 0.6 * r[0] + 0.8 * r[1]).collect();
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(wp_objective(h, u.as_ptr(), 2, &mut a), WpStatus::Ok);
        assert_eq!(wp_w2_to_std_normal(proj.as_ptr(), 3, &mut b), WpStatus::Ok);
        wp_data_free(h);
    }
    assert!((a - b).abs() < 1e-14);
}

#[test]
fn planted_model_is_recovered_through_the_abi() {
    let m = model("p = 6\nk = 1\n[signal]\nkind = \"two_point\"\nprob = 0.5\n[basis]\nkind = \"canonical\"\n");
    let mut truth = WpTruth::default();
    let mut x = ptr::null_mut();
    let mut z = ptr::null_mut();
    let mut r = ptr::null_mut();
    let opts = CString::new("seed = 3\n[stopping]\nc_sigma = 1.0\n").unwrap();
    unsafe {
        assert_eq!(wp_model_truth(m, &mut truth), WpStatus::Ok);
        assert!((truth.d_psi - 0.635_791_537).abs() < 1e-6);
        assert!(truth.snr.is_infinite());
        assert_eq!(wp_model_sample(m, 4000, 11, &mut x), WpStatus::Ok);
        assert_eq!(wp_data_whiten(x, &mut z), WpStatus::Ok);
        assert_eq!(wp_recover(z, opts.as_ptr(), &mut r), WpStatus::Ok, "{}", last_error());
        let (mut k_hat, mut len) = (0, 0);
        assert_eq!(wp_report_k_hat(r, &mut k_hat), WpStatus::Ok);
        assert_eq!(wp_report_len(r, &mut len), WpStatus::Ok);
        assert_eq!(k_hat, 1);
        assert!(len >= k_hat);
        let mut thr = 0.0;
        assert_eq!(wp_report_threshold(r, &mut thr), WpStatus::Ok);
        let mut dir = [0.0; 6];
        let mut dist = 0.0;
        assert_eq!(wp_report_direction(r, 0, dir.as_mut_ptr(), &mut dist), WpStatus::Ok);
        assert!(dir[0].abs() > 0.99, "{dir:?}");
        assert!(dist > thr);
        assert_eq!(
            wp_report_direction(r, len, dir.as_mut_ptr(), &mut dist),
            WpStatus::InvalidArgument
        );
        wp_report_free(r);
        wp_data_free(z);
        wp_data_free(x);
        wp_model_free(m);
    }
}

#[test]
fn sampling_is_deterministic() {
    let m = model("p = 3\nk = 2\n[signal]\nkind = \"two_point\"\nprob = 0.5\n");
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    let (mut va, mut vb) = (vec![0.0; 30], vec![0.0; 30]);
    unsafe {
        assert_eq!(wp_model_sample(m, 10, 5, &mut a), WpStatus::Ok);
        assert_eq!(wp_model_sample(m, 10, 5, &mut b), WpStatus::Ok);
        wp_data_values(a, va.as_mut_ptr());
        wp_data_values(b, vb.as_mut_ptr());
        wp_data_free(a);
        wp_data_free(b);
        wp_model_free(m);
    }
    assert_eq!(va, vb);
}

#[test]
fn maximize_finds_the_planted_axis() {
    let m = model("p = 4\nk = 1\n[signal]\nkind = \"uniform\"\n[basis]\nkind = \"canonical\"\n");
    let mut x = ptr::null_mut();
    let mut dir = [0.0; 4];
    let mut v = 0.0;
    unsafe {
        wp_model_sample(m, 3000, 2, &mut x);
        assert_eq!(wp_maximize(x, ptr::null(), dir.as_mut_ptr(), &mut v), WpStatus::Ok);
        wp_data_free(x);
        wp_model_free(m);
    }
    assert!(dir[0].abs() > 0.98, "{dir:?}");
    assert!((v - 0.2135).abs() < 0.03, "{v}");
}
