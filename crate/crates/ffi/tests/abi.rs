use std::ffi::{CStr, CString};
use std::ptr;

use it2stc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(it2stc_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn preset(name: &str) -> *mut It2stcExperiment {
    let name = CString::new(name).unwrap();
    let mut exp = ptr::null_mut();
    assert_eq!(
        unsafe { it2stc_experiment_from_preset(name.as_ptr(), &mut exp) },
        It2stcStatus::Ok
    );
    assert!(!exp.is_null());
    exp
}

#[test]
fn preset_run_round_trip() {
    let exp = preset("duffing-track");
    unsafe {
        assert_eq!(it2stc_experiment_set_t_end(exp, 2.0), It2stcStatus::Ok);
        assert_eq!(it2stc_experiment_set_seed(exp, 3), It2stcStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(it2stc_experiment_run(exp, &mut run), It2stcStatus::Ok);
        let mut len = 0usize;
        assert_eq!(it2stc_run_len(run, &mut len), It2stcStatus::Ok);
        assert_eq!(len, 2001);

        let mut first = It2stcSample::default();
        assert_eq!(it2stc_run_sample(run, 0, &mut first), It2stcStatus::Ok);
        assert_eq!((first.t, first.x1, first.x2), (0.0, 1.0, 0.0));
        let mut s = It2stcSample::default();
        assert_eq!(
            it2stc_run_sample(run, len, &mut s),
            It2stcStatus::OutOfRange
        );
        assert!(last_error().contains("out of range"));

        let mut m = It2stcMetrics::default();
        assert_eq!(it2stc_run_metrics(run, &mut m), It2stcStatus::Ok);
        assert!(m.rmse_e1.is_finite() && m.tv_u > 0.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("run.csv").to_str().unwrap()).unwrap();
        assert_eq!(it2stc_run_write_csv(run, path.as_ptr()), It2stcStatus::Ok);
        let text = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
        assert_eq!(text.lines().count(), len + 1);

        let bad = CString::new(dir.path().join("no/such/dir.csv").to_str().unwrap()).unwrap();
        assert_eq!(it2stc_run_write_csv(run, bad.as_ptr()), It2stcStatus::Io);

        it2stc_run_free(run);
        it2stc_experiment_free(exp);
    }
}

#[test]
fn seeded_runs_match() {
    let sample_at = |seed: u64| unsafe {
        let exp = preset("duffing-track");
        it2stc_experiment_set_t_end(exp, 1.0);
        it2stc_experiment_set_seed(exp, seed);
        let mut run = ptr::null_mut();
        it2stc_experiment_run(exp, &mut run);
        let mut s = It2stcSample::default();
        it2stc_run_sample(run, 700, &mut s);
        it2stc_run_free(run);
        it2stc_experiment_free(exp);
        (s.x1_meas, s.u)
    };
    assert_eq!(sample_at(9), sample_at(9));
    assert_ne!(sample_at(9), sample_at(10));
}

#[test]
fn toml_errors_are_reported() {
    let text = CString::new("plant.preset = \"duffing\"\n").unwrap();
    let mut exp = ptr::null_mut();
    let status = unsafe { it2stc_experiment_from_toml(text.as_ptr(), &mut exp) };
    assert_eq!(status, It2stcStatus::Config);
    assert!(exp.is_null());
    assert!(last_error().contains("controller.kind"));

    let name = CString::new("lorenz").unwrap();
    assert_eq!(
        unsafe { it2stc_experiment_from_preset(name.as_ptr(), &mut exp) },
        It2stcStatus::Config
    );
    assert_eq!(
        unsafe { it2stc_experiment_from_preset(ptr::null(), &mut exp) },
        It2stcStatus::NullPointer
    );
}

#[test]
fn setters_validate() {
    let exp = preset("duffing-free");
    unsafe {
        assert_eq!(it2stc_experiment_set_t_end(exp, -1.0), It2stcStatus::Config);
        assert_eq!(
            it2stc_experiment_set_snr_db(exp, f64::INFINITY),
            It2stcStatus::Config
        );
        assert_eq!(
            it2stc_experiment_set_snr_db(exp, f64::NAN),
            It2stcStatus::Ok
        );
        assert_eq!(
            it2stc_experiment_set_seed(ptr::null_mut(), 1),
            It2stcStatus::NullPointer
        );
        it2stc_experiment_free(exp);
        it2stc_experiment_free(ptr::null_mut());
        it2stc_run_free(ptr::null_mut());
    }
}

#[test]
fn divergence_status() {
    let text = CString::new(
        "[plant]\npreset = \"custom\"\nterms = [{ coef = 1.0, powers = [5, 0] }]\n[controller]\nkind = \"none\"\n[sim]\nt_end = 5.0\nx0 = [3.0, 0.0]\n",
    )
    .unwrap();
    let mut exp = ptr::null_mut();
    unsafe {
        assert_eq!(
            it2stc_experiment_from_toml(text.as_ptr(), &mut exp),
            It2stcStatus::Ok
        );
        let mut run = ptr::null_mut();
        assert_eq!(
            it2stc_experiment_run(exp, &mut run),
            It2stcStatus::Divergence
        );
        assert!(run.is_null());
        it2stc_experiment_free(exp);
    }
}

#[test]
fn membership_and_km() {
    let (mut lo, mut up) = (0.0, 0.0);
    unsafe {
        assert_eq!(
            it2stc_mf_bounds(-0.5, 0.5, 0.5, 0.0, &mut lo, &mut up),
            It2stcStatus::Ok
        );
        assert_eq!(up, 1.0);
        assert!((lo - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(
            it2stc_mf_bounds(0.5, -0.5, 0.5, 0.0, &mut lo, &mut up),
            It2stcStatus::Config
        );

        let l = [0.2, 0.2];
        let h = [0.8, 0.8];
        let w = [-1.0, 1.0];
        let (mut yl, mut yr) = (0.0, 0.0);
        assert_eq!(
            it2stc_km_reduce(l.as_ptr(), h.as_ptr(), w.as_ptr(), 2, &mut yl, &mut yr),
            It2stcStatus::Ok
        );
        // extremes put 0.8 on one side and 0.2 on the other
        assert!((yl + 0.6).abs() < 1e-15 && (yr - 0.6).abs() < 1e-15);

        let z = [0.0, 0.0];
        assert_eq!(
            it2stc_km_reduce(z.as_ptr(), z.as_ptr(), w.as_ptr(), 2, &mut yl, &mut yr),
            It2stcStatus::Divergence
        );
        assert_eq!(
            it2stc_km_reduce(l.as_ptr(), h.as_ptr(), w.as_ptr(), 0, &mut yl, &mut yr),
            It2stcStatus::Config
        );
        assert_eq!(
            it2stc_km_reduce(ptr::null(), h.as_ptr(), w.as_ptr(), 2, &mut yl, &mut yr),
            It2stcStatus::NullPointer
        );
    }
}
