//! Property suites run by `edrsim verify`.
//!
//! Each suite reduces to a single number compared against a tolerance:
//! either the largest deviation between equivalent computations or the
//! smallest margin of an inequality.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::povm::{self, CMatrix};
use crate::qmcore::{Operator2, SpinState, UnitAxis};
use crate::spin::{self, SpinConfig};
use crate::sweep::{linspace, row_seed, Preset};
use crate::{random, threestate, Result};

pub const ORACLE_TOLERANCE: f64 = 1e-12;
pub const OZAWA_TOLERANCE: f64 = 1e-9;

/// How a suite's figure of merit is judged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// Passes if `value ≤ tolerance`.
    MaxDeviation,
    /// Passes if `value ≥ −tolerance`.
    MinMargin,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub measure: Measure,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteReport {
    fn new(name: &'static str, cases: usize, measure: Measure, value: f64, tolerance: f64) -> Self {
        let passed = match measure {
            Measure::MaxDeviation => value <= tolerance,
            Measure::MinMargin => value >= -tolerance,
        };
        SuiteReport { name, cases, measure, value, tolerance, passed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    pub random_configs: usize,
    pub theta_samples: usize,
    pub phi_samples: usize,
    pub indirect_models: usize,
    pub random_states: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            random_configs: 10_000,
            theta_samples: 181,
            phi_samples: 361,
            indirect_models: 1000,
            random_states: 100,
        }
    }
}

/// Random `(a, b, ψ, o_a)`; configuration `i` depends only on `(seed, i)`.
pub fn random_spin_config(seed: u64, i: usize) -> SpinConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(row_seed(seed, i));
    SpinConfig {
        a: random::axis(&mut rng),
        b: random::axis(&mut rng),
        psi: random::spin_state(&mut rng),
        o_a: random::axis(&mut rng),
    }
}

fn max_of(xs: impl ParallelIterator<Item = f64>) -> f64 {
    xs.reduce(|| 0.0, f64::max)
}

fn min_of(xs: impl ParallelIterator<Item = f64>) -> f64 {
    xs.reduce(|| f64::INFINITY, f64::min)
}

/// `(θ, φ, o)` on the closed `θ ∈ [0, π]`, `φ ∈ [0, 2π]` grid.
pub fn sphere_grid(n_theta: usize, n_phi: usize) -> Vec<(f64, f64, UnitAxis)> {
    let phis = linspace(0.0, std::f64::consts::TAU, n_phi);
    linspace(0.0, std::f64::consts::PI, n_theta)
        .into_iter()
        .flat_map(|t| phis.iter().map(move |&p| (t, p, UnitAxis::from_angles(t, p))))
        .collect()
}

/// Largest pairwise gap between the operator engine, the sum forms and
/// the closed forms for `ε` and `η`.
pub fn oracle_gap(cfg: &SpinConfig) -> Result<f64> {
    let model = spin::projective_apparatus(&cfg.o_a)?;
    let a = Operator2::spin(&cfg.a).to_dmatrix();
    let b = Operator2::spin(&cfg.b).to_dmatrix();
    let psi = cfg.psi.ket();
    let eps = [
        povm::rms_error(&model, &a, &psi)?,
        povm::rms_error_sum_form(&model, &a, &psi)?,
        spin::error_exact(&cfg.a, &cfg.o_a),
    ];
    let eta = [
        povm::rms_disturbance(&model, &b, &psi)?,
        povm::rms_disturbance_sum_form(&model, &b, &psi)?,
        spin::disturbance_exact(&cfg.b, &cfg.o_a),
    ];
    Ok(spread(&eps).max(spread(&eta)))
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

pub fn oracle_equivalence(n: usize, seed: u64) -> Result<SuiteReport> {
    let gaps: Vec<f64> =
        (0..n).into_par_iter().map(|i| oracle_gap(&random_spin_config(seed, i))).collect::<Result<_>>()?;
    let worst = max_of(gaps.into_par_iter());
    Ok(SuiteReport::new("oracle_equivalence", n, Measure::MaxDeviation, worst, ORACLE_TOLERANCE))
}

/// Three-state estimates from exact expectations against the closed forms
/// on the sphere grid, standard observables.
pub fn three_state_identity(n_theta: usize, n_phi: usize) -> Result<SuiteReport> {
    let base = Preset::Standard.config();
    let grid = sphere_grid(n_theta, n_phi);
    let gaps: Vec<f64> = grid
        .par_iter()
        .map(|(_, _, o)| {
            let cfg = base.spin_config(*o);
            let (eps, eta) = threestate::exact_spin_estimates(&cfg)?;
            Ok((eps - spin::error_exact(&cfg.a, o))
                .abs()
                .max((eta - spin::disturbance_exact(&cfg.b, o)).abs()))
        })
        .collect::<Result<_>>()?;
    let worst = max_of(gaps.into_par_iter());
    Ok(SuiteReport::new("three_state_identity", grid.len(), Measure::MaxDeviation, worst, ORACLE_TOLERANCE))
}

/// The five paper scenario families.
pub const FAMILIES: [Preset; 5] =
    [Preset::Standard, Preset::Latitude, Preset::PhiB, Preset::ThetaB, Preset::Psi];

/// Smallest Ozawa margin of `preset`'s observables and state over the grid.
pub fn ozawa_grid_margin(preset: Preset, n_theta: usize, n_phi: usize) -> f64 {
    let base = preset.config();
    min_of(sphere_grid(n_theta, n_phi).into_par_iter().map(|(_, _, o)| base.spin_config(o).report().ozawa_margin()))
}

pub fn ozawa_grid(n_theta: usize, n_phi: usize) -> SuiteReport {
    let worst = FAMILIES
        .iter()
        .map(|p| ozawa_grid_margin(*p, n_theta, n_phi))
        .fold(f64::INFINITY, f64::min);
    SuiteReport::new(
        "ozawa_grid",
        FAMILIES.len() * n_theta * n_phi,
        Measure::MinMargin,
        worst,
        OZAWA_TOLERANCE,
    )
}

/// Smallest margin of `σ_Aσ_B ≥ Schrödinger ≥ Robertson` and
/// `combined ≥ max(Ozawa LHS, bound)`.
pub fn hierarchy_margin(cfg: &SpinConfig) -> f64 {
    let r = cfg.report();
    [
        r.sigma_a * r.sigma_b - r.schroedinger_bound,
        r.schroedinger_bound - r.robertson_bound,
        r.combined_lhs - r.ozawa_lhs,
        r.combined_lhs - r.commutator_bound,
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min)
}

pub fn bound_hierarchy(n: usize, seed: u64) -> SuiteReport {
    let worst = min_of((0..n).into_par_iter().map(|i| hierarchy_margin(&random_spin_config(seed, i))));
    SuiteReport::new("bound_hierarchy", n, Measure::MinMargin, worst, ORACLE_TOLERANCE)
}

/// Random instrument with `d_S, d_P ∈ {2, 3}`, observables and state.
pub struct IndirectCase {
    pub model: povm::MeasurementModel,
    pub a: CMatrix,
    pub b: CMatrix,
    pub psi: povm::CVector,
}

pub fn random_indirect_case(seed: u64, i: usize) -> Result<IndirectCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(row_seed(seed, i));
    let ds = rng.random_range(2..=3);
    let dp = rng.random_range(2..=3);
    let model = povm::from_indirect(&random::indirect_model(ds, dp, &mut rng))?;
    Ok(IndirectCase {
        model,
        a: random::hermitian(ds, &mut rng),
        b: random::hermitian(ds, &mut rng),
        psi: random::state(ds, &mut rng),
    })
}

/// `(Ozawa margin, |ε²−ε²_sum| + |η²−η²_sum|)` of one random instrument.
pub fn indirect_check(case: &IndirectCase) -> Result<(f64, f64)> {
    let report = povm::evaluate_relations(&case.model, &case.a, &case.b, &case.psi)?;
    let eps_sum = povm::rms_error_sum_form(&case.model, &case.a, &case.psi)?;
    let eta_sum = povm::rms_disturbance_sum_form(&case.model, &case.b, &case.psi)?;
    let scale = 1.0 + povm::max_abs(&case.a).powi(2) + povm::max_abs(&case.b).powi(2);
    let gap = ((report.eps.powi(2) - eps_sum.powi(2)).abs() + (report.eta.powi(2) - eta_sum.powi(2)).abs())
        / scale;
    Ok((report.ozawa_margin(), gap))
}

pub fn random_indirect_models(n: usize, seed: u64) -> Result<[SuiteReport; 2]> {
    let checks: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| indirect_check(&random_indirect_case(seed, i)?))
        .collect::<Result<_>>()?;
    let margin = checks.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let gap = checks.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok([
        SuiteReport::new("indirect_ozawa", n, Measure::MinMargin, margin, OZAWA_TOLERANCE),
        SuiteReport::new("indirect_sum_forms", n, Measure::MaxDeviation, gap, 1e-10),
    ])
}

/// Spread of exact and three-state `ε`, `η` over random `ψ` with the
/// standard observables and fixed `o_a`, and the smallest Ozawa margin.
pub fn state_independence(o_a: &UnitAxis, n: usize, seed: u64) -> Result<(f64, f64)> {
    let rows: Vec<([f64; 4], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(row_seed(seed, i));
            let psi: SpinState = random::spin_state(&mut rng);
            let cfg = SpinConfig { psi, ..SpinConfig::standard(*o_a) };
            let r = cfg.report();
            let (eps, eta) = threestate::exact_spin_estimates(&cfg)?;
            Ok(([r.eps, r.eta, eps, eta], r.ozawa_margin()))
        })
        .collect::<Result<_>>()?;
    let spread = (0..4)
        .map(|k| spread(&rows.iter().map(|r| r.0[k]).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    let margin = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok((spread, margin))
}

pub fn run_all(opts: &VerifyOptions) -> Result<VerifySummary> {
    let mut suites = vec![
        oracle_equivalence(opts.random_configs, opts.seed)?,
        three_state_identity(opts.theta_samples, opts.phi_samples)?,
        ozawa_grid(opts.theta_samples, opts.phi_samples),
        bound_hierarchy(opts.random_configs, opts.seed),
    ];
    suites.extend(random_indirect_models(opts.indirect_models, opts.seed)?);
    let o_a = UnitAxis::from_angles(1.1, 0.4);
    let (spread, margin) = state_independence(&o_a, opts.random_states, opts.seed)?;
    suites.push(SuiteReport::new(
        "state_independence",
        opts.random_states,
        Measure::MaxDeviation,
        spread,
        ORACLE_TOLERANCE,
    ));
    suites.push(SuiteReport::new(
        "state_ozawa",
        opts.random_states,
        Measure::MinMargin,
        margin,
        OZAWA_TOLERANCE,
    ));
    let passed = suites.iter().all(|s| s.passed);
    Ok(VerifySummary { seed: opts.seed, suites, passed })
}
