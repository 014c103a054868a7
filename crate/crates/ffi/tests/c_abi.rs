use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use weakbeam_ffi::*;

const GAMMA: f64 = 1.0 / 26e-9;
const DELTA: f64 = std::f64::consts::TAU * 6e5;

fn params(eps: f64) -> *mut WbParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { wb_params_new(GAMMA, DELTA, eps, 4.2e-9, &mut p) }, WbStatus::Ok);
    p
}

fn last_error() -> String {
    let m = wb_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

#[test]
fn model_values_match_the_library() {
    let p = params(0.2);
    let direct = weakbeam::pointer::VSystemParams::new(
        GAMMA,
        DELTA,
        0.2,
        weakbeam::pointer::PulseShape::square(4.2e-9).unwrap(),
    )
    .unwrap();
    let model = weakbeam::pointer::PointerModel::new(&direct).unwrap();
    let mut x = 0.0;
    unsafe {
        assert_eq!(wb_mean_arrival_time(p, &mut x), WbStatus::Ok);
        assert_eq!(x, model.mean());
        assert_eq!(wb_acceptance(p, &mut x), WbStatus::Ok);
        assert_eq!(x, model.acceptance());
        assert_eq!(wb_pdf(p, 3e-8, &mut x), WbStatus::Ok);
        assert_eq!(x, model.pdf(3e-8));
        assert_eq!(wb_convolved_pdf(p, 3e-8, &mut x), WbStatus::Ok);
        assert_eq!(x, model.convolved_pdf(3e-8));
        assert_eq!(wb_crlb_sensitivity(p, 1e6, &mut x), WbStatus::Ok);
        assert_eq!(x, weakbeam::analysis::crlb_sensitivity(&direct, 1e6).unwrap());
        wb_params_free(p);
    }
    assert!(wb_last_error_message().is_null());
}

#[test]
fn invalid_input_reports_status_and_message() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { wb_params_new(-1.0, 0.0, 0.2, 0.0, &mut p) }, WbStatus::InvalidParameter);
    assert!(p.is_null());
    assert!(last_error().contains("gamma"));

    assert_eq!(unsafe { wb_params_new(1.0, 0.0, 0.0, 0.0, &mut p) }, WbStatus::Ok);
    let mut x = 0.0;
    assert_eq!(unsafe { wb_mean_arrival_time(p, &mut x) }, WbStatus::Degenerate);
    assert_eq!(unsafe { wb_mean_arrival_time(ptr::null(), &mut x) }, WbStatus::NullPointer);
    assert_eq!(unsafe { wb_crlb_sensitivity(p, 1.0, ptr::null_mut()) }, WbStatus::NullPointer);
    unsafe { wb_params_free(p) };
    unsafe { wb_params_free(ptr::null_mut()) };
}

#[test]
fn simulate_write_read_analyze() {
    let p = params(0.3);
    let p0 = params(0.0);
    let mut o = wb_sim_options_default(2_000_000);
    o.seed = 11;
    let run = |params: *const WbParams, seed: u64| {
        let mut opts = o;
        opts.seed = seed;
        let mut e = ptr::null_mut();
        assert_eq!(unsafe { wb_simulate(params, &opts, &mut e) }, WbStatus::Ok, "{}", last_error());
        e
    };
    let data = run(p, 11);
    let n = unsafe { wb_events_len(data) };
    assert!(n > 1000);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("run.wbev").to_str().unwrap()).unwrap();
    let mut back = ptr::null_mut();
    unsafe {
        assert_eq!(wb_events_write(data, path.as_ptr()), WbStatus::Ok);
        assert_eq!(wb_events_read(path.as_ptr(), &mut back), WbStatus::Ok);
        assert_eq!(wb_events_len(back), n);
        let (mut a, mut b) = (WbEvent { shot_index: 0, t_rel: 0.0, tag: 9 }, WbEvent { shot_index: 1, t_rel: 1.0, tag: 9 });
        assert_eq!(wb_events_get(data, n - 1, &mut a), WbStatus::Ok);
        assert_eq!(wb_events_get(back, n - 1, &mut b), WbStatus::Ok);
        assert_eq!(a, b);
        assert!(a.t_rel >= 0.0 && a.t_rel < o.rep_period && a.tag <= 2);
        assert_eq!(wb_events_get(data, n, &mut a), WbStatus::OutOfRange);
    }

    let opts = wb_analysis_options_default();
    let mut r = WbAnalysisResult {
        scale: 0.0,
        scale_se: 0.0,
        gamma_eff: 0.0,
        gamma_eff_se: 0.0,
        mean_arrival: 0.0,
        mean_arrival_se: 0.0,
        chi2_reduced: 0.0,
        background_fraction: 0.0,
    };
    unsafe {
        assert_eq!(wb_analyze(data, ptr::null(), ptr::null(), p, &opts, &mut r), WbStatus::Ok, "{}", last_error());
    }
    assert!(r.mean_arrival > 20e-9 && r.mean_arrival < 60e-9, "{}", r.mean_arrival);
    assert!(r.mean_arrival_se > 0.0);
    assert!(r.background_fraction.is_nan());
    let before = run(p0, 12);
    unsafe {
        assert_eq!(wb_analyze(data, before, ptr::null(), p, &opts, &mut r), WbStatus::NullPointer);
        assert_eq!(wb_events_len(ptr::null()), 0);
        wb_events_free(before);
        wb_events_free(back);
        wb_events_free(data);
        wb_params_free(p);
        wb_params_free(p0);
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let path = CString::new("/nonexistent/dir/run.wbev").unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { wb_events_read(path.as_ptr(), &mut e) }, WbStatus::Io);
    assert!(e.is_null());
    assert_eq!(unsafe { wb_events_read(ptr::null(), &mut e) }, WbStatus::NullPointer);
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/weakbeam.h");
    let text = std::fs::read_to_string(&header).expect("header is generated by the build script");
    for name in ["wb_params_new", "wb_simulate", "wb_analyze", "wb_last_error_message", "WB_STATUS_PANIC"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint probe(void) {{ WbParams *p = 0; double m; \
             WbStatus s = wb_params_new(1.0, 0.0, 0.2, 0.0, &p); \
             if (s == WB_STATUS_OK) s = wb_mean_arrival_time(p, &m); wb_params_free(p); return (int)s; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let status = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status();
    match status {
        Ok(s) => assert!(s.success(), "header failed to compile"),
        Err(e) => panic!("no C compiler available: {e}"),
    }
}
