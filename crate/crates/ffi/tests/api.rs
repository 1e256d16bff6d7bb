use std::ffi::{c_char, CStr, CString};
use std::ptr;

use dmvc_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe {
        dmvc_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn rluf_cdf_matches_closed_form() {
    let mut c = 0.0;
    let s = unsafe { dmvc_rluf_cdf(0.5, 0.25, 1.0, 2.0, 2.0, &mut c) };
    assert_eq!(s, DmvcStatus::Ok);
    let expected = 0.5 * 0.25 + (0.5 * 0.5 * 0.5) * (0.25 * 0.75 * 0.75);
    assert!((c - expected).abs() < 1e-14);
}

#[test]
fn domain_errors_set_the_message() {
    let mut c = 0.0;
    let s = unsafe { dmvc_rluf_cdf(1.5, 0.5, 1.0, 2.0, 2.0, &mut c) };
    assert_eq!(s, DmvcStatus::Domain);
    assert!(last_error().contains("outside [0, 1]"));
    let name = unsafe { CStr::from_ptr(dmvc_status_name(s)) };
    assert_eq!(name.to_str().unwrap(), "domain error");
}

#[test]
fn null_outputs_are_rejected() {
    let s = unsafe { dmvc_tawn_cdf(0.3, 0.4, 0.5, 1.0, 2.0, ptr::null_mut()) };
    assert_eq!(s, DmvcStatus::NullPointer);
    assert_eq!(last_error(), "result is null");
}

#[test]
fn error_message_reports_full_length() {
    let mut c = 0.0;
    unsafe { dmvc_rluf_cdf(0.5, 0.5, 1.0, -1.0, 2.0, &mut c) };
    let full = unsafe { dmvc_last_error_message(ptr::null_mut(), 0) };
    let mut small = [0 as c_char; 4];
    let reported = unsafe { dmvc_last_error_message(small.as_mut_ptr(), small.len()) };
    assert_eq!(full, reported);
    assert!(full > 3);
    assert_eq!(small[3], 0);
}

#[test]
fn tawn_sampling_is_reproducible_and_in_range() {
    let n = 200;
    let (mut u1, mut v1, mut u2, mut v2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    unsafe {
        assert_eq!(dmvc_tawn_sample(n, 0.5, 1.0, 30.0, 4, u1.as_mut_ptr(), v1.as_mut_ptr()), DmvcStatus::Ok);
        assert_eq!(dmvc_tawn_sample(n, 0.5, 1.0, 30.0, 4, u2.as_mut_ptr(), v2.as_mut_ptr()), DmvcStatus::Ok);
    }
    assert_eq!(u1, u2);
    assert_eq!(v1, v2);
    assert!(u1.iter().chain(&v1).all(|x| *x > 0.0 && *x < 1.0));
}

#[test]
fn metrics_on_a_small_case() {
    let a = [0u32, 0, 1, 1];
    let b = [5u32, 5, 5, 2];
    let (mut ri, mut acc) = (0.0, 0.0);
    unsafe {
        assert_eq!(dmvc_rand_index(a.as_ptr(), b.as_ptr(), 4, &mut ri), DmvcStatus::Ok);
        assert_eq!(dmvc_accuracy(b.as_ptr(), a.as_ptr(), 4, &mut acc), DmvcStatus::Ok);
    }
    assert!((ri - 0.5).abs() < 1e-12);
    assert!((acc - 0.75).abs() < 1e-12);
}

#[test]
fn similarity_handle_round_trip() {
    let draws = [0u32, 0, 1, 0, 1, 1, 0, 0, 1];
    let mut h: *mut DmvcSimilarity = ptr::null_mut();
    unsafe {
        assert_eq!(dmvc_similarity_new(draws.as_ptr(), 3, 3, &mut h), DmvcStatus::Ok);
        assert_eq!(dmvc_similarity_size(h), 3);
        let mut s = 0.0;
        assert_eq!(dmvc_similarity_get(h, 0, 1, &mut s), DmvcStatus::Ok);
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(dmvc_similarity_get(h, 3, 0, &mut s), DmvcStatus::InvalidArgument);
        let mut labels = [9u32; 3];
        assert_eq!(dmvc_similarity_consensus(h, labels.as_mut_ptr(), 3), DmvcStatus::Ok);
        assert_eq!(labels, [0, 0, 1]);
        dmvc_similarity_free(h);
        dmvc_similarity_free(ptr::null_mut());
    }
}

#[test]
fn empty_trace_is_reported() {
    let mut h: *mut DmvcSimilarity = ptr::null_mut();
    let s = unsafe { dmvc_similarity_new(ptr::null(), 0, 5, &mut h) };
    assert_eq!(s, DmvcStatus::EmptyTrace);
    assert!(h.is_null());
}

#[test]
fn simulate_then_fit_in_memory() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, r#"{"copula": {"family": "tawn1", "psi1": 0.5, "theta": 30.0},
        "views": [
            {"name": "U", "mixture": {"means": [0, 3], "sds": [1, 0.5], "weights": [0.5, 0.5]}},
            {"name": "V", "mixture": {"means": [0, 3], "sds": [1, 0.5], "weights": [0.5, 0.5]}}],
        "n": 30, "true_direction": ["V", "U"], "declared_direction": "true", "seed": 1}"#)
    .unwrap();
    let out = dir.path().join("sim");
    let c_scenario = CString::new(scenario.to_str().unwrap()).unwrap();
    let c_out = CString::new(out.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { dmvc_simulate(c_scenario.as_ptr(), c_out.as_ptr()) }, DmvcStatus::Ok, "{}", last_error());

    let case = out.join("case_i.json");
    let text = std::fs::read_to_string(&case)
        .unwrap()
        .replace("\"sweeps\": 2000", "\"sweeps\": 8")
        .replace("\"burn_in\": 1000", "\"burn_in\": 4");
    std::fs::write(&case, text).unwrap();
    let c_case = CString::new(case.to_str().unwrap()).unwrap();
    let mut h: *mut DmvcFit = ptr::null_mut();
    unsafe {
        assert_eq!(dmvc_fit_new(c_case.as_ptr(), &mut h), DmvcStatus::Ok, "{}", last_error());
        assert_eq!(dmvc_fit_objects(h), 30);
        assert_eq!(dmvc_fit_chains(h), 1);
        assert_eq!(dmvc_fit_draws(h), 4);
        assert_eq!(dmvc_fit_final_view(h), 0);
        let mut labels = vec![0u32; 30];
        assert_eq!(dmvc_fit_labels(h, 0, 3, 1, labels.as_mut_ptr(), 30), DmvcStatus::Ok);
        assert!(labels.iter().all(|&l| l < 15));
        assert_eq!(dmvc_fit_labels(h, 0, 4, 1, labels.as_mut_ptr(), 30), DmvcStatus::InvalidArgument);
        dmvc_fit_free(h);
    }
}

#[test]
fn bad_config_path_is_an_io_error() {
    let missing = CString::new("/nonexistent/dmvc.json").unwrap();
    let mut h: *mut DmvcFit = ptr::null_mut();
    assert_eq!(unsafe { dmvc_fit_new(missing.as_ptr(), &mut h) }, DmvcStatus::Io);
    assert!(h.is_null());
}
