use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_abs_diff_eq;
use edrsim::beamline::{self, Counting, ImperfectionModel, MonteCarloSettings};
use edrsim::config::parse_config;
use edrsim::output::{write_rows, Format};
use edrsim::spin::{self, SpinConfig};
use edrsim::sweep::{run_scenario, theory_curve, Mode, Preset};
use edrsim::{povm, threestate, SpinState, UnitAxis};

#[test]
fn config_file_to_rows() {
    let text = r#"
name = "tilted"
[observables]
a = "x"
b = { theta = "45 deg", phi = "90 deg" }
[state]
axis = { theta = "30 deg", phi = "10 deg" }
[path]
kind = "latitude"
theta = "pi/3 rad"
samples = 25
[apparatus]
mode = "three_state"
"#;
    let cfg = parse_config(text).unwrap();
    let rows = run_scenario(&cfg.scenario).unwrap();
    assert_eq!(rows.len(), 25);
    for r in &rows {
        let est = r.estimate.unwrap();
        assert_abs_diff_eq!(est.eps, r.exact.eps, epsilon = 1e-12);
        assert_abs_diff_eq!(est.eta, r.exact.eta, epsilon = 1e-12);
        let (te, th) = theory_curve(&cfg.scenario, r.theta, r.phi, &r.o_a);
        assert_abs_diff_eq!(te, r.exact.eps, epsilon = 1e-12);
        assert_abs_diff_eq!(th, r.exact.eta, epsilon = 1e-12);
        assert!(r.exact.ozawa_ok);
    }
}

#[test]
fn exact_rows_rederive_from_config_alone() {
    let text = "preset = \"thetaB\"\n[path]\nsamples = 13\n";
    let a = run_scenario(&parse_config(text).unwrap().scenario).unwrap();
    let b = run_scenario(&parse_config(text).unwrap().scenario).unwrap();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    write_rows(&a, Format::Csv, &mut x).unwrap();
    write_rows(&b, Format::Csv, &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn psi_preset_rows_match_standard() {
    let std_rows = run_scenario(&Preset::Standard.config()).unwrap();
    let psi_rows = run_scenario(&Preset::Psi.config()).unwrap();
    for (s, p) in std_rows.iter().zip(&psi_rows) {
        assert_eq!(s.exact.eps, p.exact.eps);
        assert_eq!(s.exact.eta, p.exact.eta);
    }
}

#[test]
fn engine_and_spin_forms_agree_on_paths() {
    for preset in Preset::ALL {
        let cfg = preset.config();
        let a = edrsim::Operator2::spin(&cfg.a).to_dmatrix();
        let b = edrsim::Operator2::spin(&cfg.b).to_dmatrix();
        for (_, _, o) in cfg.points().into_iter().step_by(30) {
            let model = spin::projective_apparatus(&o).unwrap();
            let engine = povm::evaluate_relations(&model, &a, &b, &cfg.psi.ket()).unwrap();
            let closed = cfg.spin_config(o).report();
            assert_abs_diff_eq!(engine.eps, closed.eps, epsilon = 1e-12);
            assert_abs_diff_eq!(engine.eta, closed.eta, epsilon = 1e-12);
            assert_abs_diff_eq!(engine.ozawa_lhs, closed.ozawa_lhs, epsilon = 1e-12);
            assert_abs_diff_eq!(engine.commutator_bound, closed.commutator_bound, epsilon = 1e-12);
        }
    }
}

#[test]
fn noiseless_simulation_reproduces_three_state_values() {
    let settings = MonteCarloSettings {
        counting: Counting::Ideal,
        replicates: 2,
        imperfections: ImperfectionModel::ideal(),
    };
    for phi in [0.3, 1.2, 2.9] {
        let cfg = SpinConfig::standard(UnitAxis::from_angles(FRAC_PI_2, phi));
        let est = beamline::run_with_error_bars(&cfg, &settings, 1).unwrap();
        let (eps, eta) = threestate::exact_spin_estimates(&cfg).unwrap();
        assert_abs_diff_eq!(est.eps.mean, eps, epsilon = 1e-12);
        assert_abs_diff_eq!(est.eta.mean, eta, epsilon = 1e-12);
        assert_eq!(est.eps.sd, 0.0);
    }
}

#[test]
fn monte_carlo_scenario_is_seeded() {
    let mut cfg = Preset::Standard.config();
    cfg.samples = 4;
    cfg.mode = Mode::MonteCarlo(MonteCarloSettings { replicates: 8, ..Default::default() });
    cfg.seed = 99;
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a, b);
    cfg.seed = 100;
    assert_ne!(a, run_scenario(&cfg).unwrap());
}

#[test]
fn maximal_error_for_reversed_apparatus() {
    let cfg = SpinConfig::standard(UnitAxis::from_angles(FRAC_PI_2, PI));
    let (eps, _) = threestate::exact_spin_estimates(&cfg).unwrap();
    assert_abs_diff_eq!(eps, 2.0, epsilon = 1e-12);
    assert!(SpinState::plus_z().same_ray(&cfg.psi, 0.0));
}
