use std::ffi::{CStr, CString};
use std::ptr;

use edrsim_ffi::*;

const X: EdrVec3 = EdrVec3 { x: 1.0, y: 0.0, z: 0.0 };
const Y: EdrVec3 = EdrVec3 { x: 0.0, y: 1.0, z: 0.0 };
const Z: EdrVec3 = EdrVec3 { x: 0.0, y: 0.0, z: 1.0 };

fn equator(phi: f64) -> EdrVec3 {
    EdrVec3 { x: phi.cos(), y: phi.sin(), z: 0.0 }
}

#[test]
fn report_and_three_state_agree() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(edr_spin_config_new(X, Y, Z, equator(0.4), &mut cfg), EdrStatus::Ok);
        for phi in [0.0, 0.4, 1.3, 3.0, 5.5] {
            assert_eq!(edr_spin_config_set_apparatus(cfg, equator(phi)), EdrStatus::Ok);
            let mut r = EdrReport::default();
            assert_eq!(edr_spin_config_report(cfg, &mut r), EdrStatus::Ok);
            assert!((r.eps - 2.0 * (phi / 2.0).sin().abs()).abs() < 1e-12);
            assert!((r.eta - 2f64.sqrt() * phi.cos().abs()).abs() < 1e-12);
            let (mut eps, mut eta) = (0.0, 0.0);
            assert_eq!(edr_spin_config_three_state(cfg, &mut eps, &mut eta), EdrStatus::Ok);
            assert!((eps - r.eps).abs() < 1e-12 && (eta - r.eta).abs() < 1e-12);
        }
        edr_spin_config_free(cfg);
        edr_spin_config_free(ptr::null_mut());
    }
}

#[test]
fn simulate_is_seeded() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(edr_spin_config_new(X, Y, Z, Y, &mut cfg), EdrStatus::Ok);
        let settings =
            EdrMonteCarlo { counts_per_setting: 4000.0, replicates: 20, efficiency: 0.96, jitter: 0.026 };
        let (mut a, mut b) = (EdrEstimate::default(), EdrEstimate::default());
        assert_eq!(edr_spin_config_simulate(cfg, &settings, 5, &mut a), EdrStatus::Ok);
        assert_eq!(edr_spin_config_simulate(cfg, &settings, 5, &mut b), EdrStatus::Ok);
        assert_eq!(a, b);
        assert!((a.eps - 2f64.sqrt()).abs() < 3.0 * a.eps_sd + 1e-3);
        let bad = EdrMonteCarlo { efficiency: 1.5, ..settings };
        assert_eq!(edr_spin_config_simulate(cfg, &bad, 5, &mut a), EdrStatus::InvalidArgument);
        let few = EdrMonteCarlo { replicates: 1, ..settings };
        assert_eq!(edr_spin_config_simulate(cfg, &few, 5, &mut a), EdrStatus::InvalidArgument);
        edr_spin_config_free(cfg);
    }
}

#[test]
fn threshold_through_c_abi() {
    let mut t = 0.0;
    let st = unsafe { edr_violation_threshold(X, Y, Z, 0.0, std::f64::consts::FRAC_PI_2, 1e-7, &mut t) };
    assert_eq!(st, EdrStatus::Ok);
    assert!((t.to_degrees() - 0.75f64.asin().to_degrees()).abs() < 0.01);
}

#[test]
fn scenario_rows_and_write() {
    unsafe {
        let name = CString::new("phiB").unwrap();
        let mut sc = ptr::null_mut();
        assert_eq!(edr_scenario_from_preset(name.as_ptr(), &mut sc), EdrStatus::Ok);
        assert_eq!(edr_scenario_set_samples(sc, 7), EdrStatus::Ok);
        assert_eq!(edr_scenario_set_samples(sc, 1), EdrStatus::InvalidArgument);
        let mut rows = ptr::null_mut();
        assert_eq!(edr_scenario_run(sc, &mut rows), EdrStatus::Ok);
        assert_eq!(edr_rows_len(rows), 7);
        let mut row = EdrRow::default();
        assert_eq!(edr_rows_get(rows, 0, &mut row), EdrStatus::Ok);
        assert!((row.ports.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("rows.json").to_str().unwrap()).unwrap();
        assert_eq!(edr_rows_write(rows, path.as_ptr(), EDR_FORMAT_JSON), EdrStatus::Ok);
        assert_eq!(edr_rows_write(rows, path.as_ptr(), 9), EdrStatus::InvalidArgument);
        let missing = CString::new(dir.path().join("no/such/rows.csv").to_str().unwrap()).unwrap();
        assert_eq!(edr_rows_write(rows, missing.as_ptr(), EDR_FORMAT_CSV), EdrStatus::Io);
        edr_rows_free(rows);
        edr_scenario_free(sc);
        assert_eq!(edr_rows_len(ptr::null()), 0);
    }
}

#[test]
fn config_errors_carry_line() {
    unsafe {
        let text = CString::new("preset = \"standard\"\n[apparatus]\nefficiency = 2.0\n").unwrap();
        let mut sc = ptr::null_mut();
        assert_eq!(edr_scenario_parse(text.as_ptr(), &mut sc), EdrStatus::Config);
        assert!(sc.is_null());
        let msg = CStr::from_ptr(edr_last_error_message()).to_str().unwrap();
        assert!(msg.contains("line 3"), "{msg}");
        let unknown = CString::new("nope").unwrap();
        assert_eq!(edr_scenario_from_preset(unknown.as_ptr(), &mut sc), EdrStatus::InvalidArgument);
        assert_eq!(edr_scenario_parse(ptr::null(), &mut sc), EdrStatus::NullPointer);
    }
}
