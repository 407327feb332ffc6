use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use noarb_ffi::*;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(noarb_last_error()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn load(name: &str) -> *mut NoarbModel {
    let mut m = ptr::null_mut();
    let s = unsafe { noarb_model_from_file(fixture(name).as_ptr(), &mut m) };
    assert_eq!(s, NoarbStatus::Ok, "{}", last_error());
    m
}

fn analyze(m: *const NoarbModel) -> *mut NoarbReport {
    let mut r = ptr::null_mut();
    let s = unsafe { noarb_analyze(m, f64::NAN, 0, &mut r) };
    assert_eq!(s, NoarbStatus::Ok, "{}", last_error());
    r
}

fn verdict(r: *const NoarbReport, name: &str) -> NoarbTruth {
    let name = CString::new(name).unwrap();
    let mut t = NoarbTruth::Unknown;
    let s = unsafe { noarb_report_verdict(r, name.as_ptr(), &mut t) };
    assert_eq!(s, NoarbStatus::Ok, "{}", last_error());
    t
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { noarb_string_free(p) };
    s
}

#[test]
fn bessel3_verdicts_through_the_c_interface() {
    let m = load("bessel3.model");
    let r = analyze(m);
    assert_eq!(verdict(r, "nflvr_finite_t"), NoarbTruth::Fails);
    assert_eq!(verdict(r, "nra_finite_t"), NoarbTruth::Holds);
    assert_eq!(verdict(r, "z_martingale"), NoarbTruth::Fails);
    assert_eq!(verdict(r, "nga_infinite"), NoarbTruth::Fails);
    assert_eq!(unsafe { noarb_report_has_unknown(r) }, 0);
    assert_eq!(unsafe { noarb_report_flag_count(r) }, 0);
    assert_eq!(last_error(), "");
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
}

#[test]
fn json_and_text_renderings_are_returned() {
    let m = load("gbm.model");
    let r = analyze(m);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { noarb_report_to_json(r, &mut p) }, NoarbStatus::Ok);
    let json: serde_json::Value = serde_json::from_str(&take_string(p)).unwrap();
    assert!(json.get("z").is_some(), "{json}");
    assert_eq!(unsafe { noarb_report_to_text(r, &mut p) }, NoarbStatus::Ok);
    assert!(take_string(p).contains("market verdicts"));
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
}

#[test]
fn model_from_text_matches_model_from_file() {
    let text = CString::new("mu = 0.05*x\nsigma = 0.2*x\nx0 = 1\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { noarb_model_from_text(text.as_ptr(), &mut m) }, NoarbStatus::Ok);
    let a = analyze(m);
    let f = load("gbm.model");
    let b = analyze(f);
    for name in ["z_martingale", "nflvr_finite_t", "nflvr_infinite", "nra_finite_t"] {
        assert_eq!(verdict(a, name), verdict(b, name), "{name}");
    }
    unsafe {
        noarb_report_free(a);
        noarb_report_free(b);
        noarb_model_free(m);
        noarb_model_free(f);
    }
}

#[test]
fn error_codes_distinguish_failure_kinds() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { noarb_model_from_file(fixture("bad.model").as_ptr(), &mut m) },
        NoarbStatus::ParseError
    );
    assert!(m.is_null());
    assert!(last_error().contains("bad.model"), "{}", last_error());

    let missing = fixture("no_such.model");
    assert_eq!(
        unsafe { noarb_model_from_file(missing.as_ptr(), &mut m) },
        NoarbStatus::ParseError
    );

    let vanishing = CString::new("mu = x\nsigma = x - 1\nx0 = 2\n").unwrap();
    assert_eq!(
        unsafe { noarb_model_from_text(vanishing.as_ptr(), &mut m) },
        NoarbStatus::ModelRejected
    );
    assert!(last_error().contains("sigma vanishes"), "{}", last_error());

    let invalid = [0xffu8, 0xfe, 0];
    assert_eq!(
        unsafe { noarb_model_from_text(invalid.as_ptr().cast(), &mut m) },
        NoarbStatus::InvalidUtf8
    );
}

#[test]
fn null_arguments_are_reported_not_dereferenced() {
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { noarb_model_from_text(ptr::null(), &mut m) },
        NoarbStatus::NullArgument
    );
    let text = CString::new("mu = 0\nsigma = 1\nx0 = 1\ninterval = (-inf, inf)\n").unwrap();
    assert_eq!(
        unsafe { noarb_model_from_text(text.as_ptr(), ptr::null_mut()) },
        NoarbStatus::NullArgument
    );
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { noarb_analyze(ptr::null(), f64::NAN, 0, &mut r) },
        NoarbStatus::NullArgument
    );
    assert_eq!(unsafe { noarb_report_has_unknown(ptr::null()) }, -1);
    assert_eq!(unsafe { noarb_report_flag_count(ptr::null()) }, -1);
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { noarb_report_to_json(ptr::null(), &mut p) },
        NoarbStatus::NullArgument
    );
    unsafe {
        noarb_model_free(ptr::null_mut());
        noarb_report_free(ptr::null_mut());
        noarb_string_free(ptr::null_mut());
    }
}

#[test]
fn unknown_verdict_names_are_invalid_arguments() {
    let m = load("gbm.model");
    let r = analyze(m);
    let name = CString::new("no_such_verdict").unwrap();
    let mut t = NoarbTruth::Holds;
    assert_eq!(
        unsafe { noarb_report_verdict(r, name.as_ptr(), &mut t) },
        NoarbStatus::InvalidArgument
    );
    assert!(last_error().contains("nflvr_finite_t"), "{}", last_error());
    assert_eq!(t, NoarbTruth::Holds);
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
}

#[test]
fn undecided_models_report_unknown() {
    let m = load("fading_vol.model");
    let r = analyze(m);
    assert_eq!(unsafe { noarb_report_has_unknown(r) }, 1);
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
}

fn simulated_json(threads: usize) -> String {
    let m = load("bessel3.model");
    let r = analyze(m);
    let config = NoarbSimConfig {
        n_paths: 4000,
        dt: 0.01,
        horizon: 1.0,
        seed: 7,
        boundary_eps: 0.0,
        z_level: 4.0,
        threads,
    };
    assert_eq!(
        unsafe { noarb_simulate(m, &config, r) },
        NoarbStatus::Ok,
        "{}",
        last_error()
    );
    assert_eq!(unsafe { noarb_report_flag_count(r) }, 0);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { noarb_report_to_json(r, &mut p) }, NoarbStatus::Ok);
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
    let json: serde_json::Value = serde_json::from_str(&take_string(p)).unwrap();
    json["simulation"].to_string()
}

#[test]
fn simulation_attaches_and_is_thread_count_invariant() {
    let one = simulated_json(1);
    assert!(one.contains("mean_z"), "{one}");
    assert_eq!(one, simulated_json(3));
}

#[test]
fn bad_simulation_settings_are_rejected() {
    let m = load("gbm.model");
    let r = analyze(m);
    let mut config = NoarbSimConfig {
        n_paths: 10,
        dt: -1.0,
        horizon: 1.0,
        seed: 1,
        boundary_eps: 0.0,
        z_level: 3.0,
        threads: 1,
    };
    assert_eq!(unsafe { noarb_simulate(m, &config, r) }, NoarbStatus::SimulationError);
    config.dt = 0.01;
    config.z_level = 0.0;
    assert_eq!(unsafe { noarb_simulate(m, &config, r) }, NoarbStatus::InvalidArgument);
    assert_eq!(unsafe { noarb_report_flag_count(r) }, 0);
    unsafe {
        noarb_report_free(r);
        noarb_model_free(m);
    }
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(noarb_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
