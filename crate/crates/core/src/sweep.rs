//! Scenario engine: paths of the apparatus axis `o_a`, theory curves,
//! Bloch-sphere scans and Heisenberg-violation analysis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2, TAU};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::beamline::{self, MonteCarloSettings, PortProbabilities};
use crate::povm::UncertaintyReport;
use crate::qmcore::{SpinState, UnitAxis};
use crate::spin::{self, SpinConfig};
use crate::{threestate, tolerance, Error, Result};

pub const DEFAULT_SAMPLES: usize = 361;
pub const DEFAULT_VIOLATION_RESOLUTION: usize = 3601;

/// Path traced by `o_a`. Angle ranges include both endpoints.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Path {
    Equator { phi_start: f64, phi_end: f64 },
    Latitude { theta: f64, phi_start: f64, phi_end: f64 },
    Custom { axes: Vec<UnitAxis> },
}

impl Path {
    pub fn equator() -> Self {
        Path::Equator { phi_start: 0.0, phi_end: TAU }
    }

    pub fn latitude(theta: f64) -> Self {
        Path::Latitude { theta, phi_start: 0.0, phi_end: TAU }
    }

    fn polar(&self) -> Option<f64> {
        match self {
            Path::Equator { .. } => Some(FRAC_PI_2),
            Path::Latitude { theta, .. } => Some(*theta),
            Path::Custom { .. } => None,
        }
    }

    /// `(θ_OA, φ_OA, o_a)` for every sample.
    pub fn points(&self, samples: usize) -> Vec<(f64, f64, UnitAxis)> {
        match self {
            Path::Equator { phi_start, phi_end } | Path::Latitude { phi_start, phi_end, .. } => {
                let theta = self.polar().expect("angular path");
                linspace(*phi_start, *phi_end, samples)
                    .into_iter()
                    .map(|phi| (theta, phi, UnitAxis::from_angles(theta, phi)))
                    .collect()
            }
            Path::Custom { axes } => axes
                .iter()
                .map(|n| {
                    let (theta, phi) = n.angles();
                    (theta, phi, *n)
                })
                .collect(),
        }
    }
}

/// `n` evenly spaced values including both ends.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { end } else { start + step * i as f64 }).collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Closed forms only.
    Exact,
    /// Three-state reconstruction from exact expectation values.
    ThreeStateExact,
    /// Simulated counting experiment with error bars.
    MonteCarlo(MonteCarloSettings),
}

/// Scenario family, selecting the printed theory curve for `ε` and `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `A = σ_x`, `B = σ_y`, any `ψ`.
    Standard,
    /// `B = σ_x cos φ_B + σ_y sin φ_B`.
    PhiB { phi_b: f64 },
    /// `B = σ_y sin θ_B + σ_z cos θ_B`.
    ThetaB { theta_b: f64 },
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub a: UnitAxis,
    pub b: UnitAxis,
    pub psi: SpinState,
    pub path: Path,
    pub samples: usize,
    pub mode: Mode,
    pub family: Family,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.path {
            Path::Custom { axes } if axes.is_empty() => {
                Err(Error::InvalidParameter("custom path has no axes".into()))
            }
            Path::Custom { .. } => Ok(()),
            _ if self.samples < 2 => Err(Error::InvalidParameter(format!(
                "samples must be at least 2, got {}",
                self.samples
            ))),
            _ => Ok(()),
        }
    }

    pub fn points(&self) -> Vec<(f64, f64, UnitAxis)> {
        self.path.points(self.samples)
    }

    pub fn spin_config(&self, o_a: UnitAxis) -> SpinConfig {
        SpinConfig { a: self.a, b: self.b, psi: self.psi, o_a }
    }
}

/// Named scenario families for one-command reproduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// `A = σ_x`, `B = σ_y`, `ψ = |+z⟩`, equator.
    Standard,
    /// Standard observables on the latitude `θ_OA = π/3`.
    Latitude,
    /// Latitude `θ_OA = 40°`, below the violation threshold.
    LatitudeBelow,
    /// Latitude `θ_OA = 60°`, above the violation threshold.
    LatitudeAbove,
    /// `φ_B = π/3`, equator.
    PhiB,
    /// `θ_B = π/4`, equator.
    ThetaB,
    /// `θ_B = π/4`, latitude `θ_OA = π/3`.
    ThetaBLatitude,
    /// `θ_B = π/4`, latitude `θ_OA = θ_B`.
    ThetaBMatched,
    /// `ψ(θ_ψ = π/4, φ_ψ = π/12)`, equator.
    Psi,
}

pub const PRESET_PHI_B: f64 = FRAC_PI_3;
pub const PRESET_THETA_B: f64 = FRAC_PI_4;
pub const PRESET_THETA_PSI: f64 = FRAC_PI_4;
pub const PRESET_PHI_PSI: f64 = PI / 12.0;

impl Preset {
    pub const ALL: [Preset; 9] = [
        Preset::Standard,
        Preset::Latitude,
        Preset::LatitudeBelow,
        Preset::LatitudeAbove,
        Preset::PhiB,
        Preset::ThetaB,
        Preset::ThetaBLatitude,
        Preset::ThetaBMatched,
        Preset::Psi,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Standard => "standard",
            Preset::Latitude => "latitude",
            Preset::LatitudeBelow => "latitude-40",
            Preset::LatitudeAbove => "latitude-60",
            Preset::PhiB => "phiB",
            Preset::ThetaB => "thetaB",
            Preset::ThetaBLatitude => "thetaB-lat",
            Preset::ThetaBMatched => "thetaB-matched",
            Preset::Psi => "psi",
        }
    }

    pub fn config(&self) -> ScenarioConfig {
        let theta_b_axis = UnitAxis::from_angles(PRESET_THETA_B, FRAC_PI_2);
        let (b, psi, path, family) = match self {
            Preset::Standard => (UnitAxis::Y, SpinState::plus_z(), Path::equator(), Family::Standard),
            Preset::Latitude => {
                (UnitAxis::Y, SpinState::plus_z(), Path::latitude(FRAC_PI_3), Family::Standard)
            }
            Preset::LatitudeBelow => (
                UnitAxis::Y,
                SpinState::plus_z(),
                Path::latitude(40f64.to_radians()),
                Family::Standard,
            ),
            Preset::LatitudeAbove => (
                UnitAxis::Y,
                SpinState::plus_z(),
                Path::latitude(60f64.to_radians()),
                Family::Standard,
            ),
            Preset::PhiB => (
                UnitAxis::from_angles(FRAC_PI_2, PRESET_PHI_B),
                SpinState::plus_z(),
                Path::equator(),
                Family::PhiB { phi_b: PRESET_PHI_B },
            ),
            Preset::ThetaB => (
                theta_b_axis,
                SpinState::plus_z(),
                Path::equator(),
                Family::ThetaB { theta_b: PRESET_THETA_B },
            ),
            Preset::ThetaBLatitude => (
                theta_b_axis,
                SpinState::plus_z(),
                Path::latitude(FRAC_PI_3),
                Family::ThetaB { theta_b: PRESET_THETA_B },
            ),
            Preset::ThetaBMatched => (
                theta_b_axis,
                SpinState::plus_z(),
                Path::latitude(PRESET_THETA_B),
                Family::ThetaB { theta_b: PRESET_THETA_B },
            ),
            Preset::Psi => (
                UnitAxis::Y,
                SpinState::from_angles(PRESET_THETA_PSI, PRESET_PHI_PSI),
                Path::equator(),
                Family::Standard,
            ),
        };
        ScenarioConfig {
            name: self.name().to_string(),
            a: UnitAxis::X,
            b,
            psi,
            path,
            samples: DEFAULT_SAMPLES,
            mode: Mode::Exact,
            family,
            seed: 0,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Preset {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidParameter(format!("unknown preset {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Printed theory curve for `(ε, η)` of the family at `(θ_OA, φ_OA)`.
/// Falls back to the general angle forms where no printed curve applies.
pub fn theory_curve(cfg: &ScenarioConfig, theta: f64, phi: f64, o_a: &UnitAxis) -> (f64, f64) {
    let general = || {
        (
            spin::error_from_angle(cfg.a.angle_to(o_a)),
            spin::disturbance_from_angle(cfg.b.angle_to(o_a)),
        )
    };
    let on_circle = cfg.path.polar().is_some();
    match cfg.family {
        Family::Standard if is_equator(&cfg.path) => {
            (2.0 * (phi / 2.0).sin().abs(), SQRT_2 * phi.cos().abs())
        }
        Family::Standard if on_circle => latitude_curves(theta, phi),
        Family::PhiB { phi_b } if is_equator(&cfg.path) => {
            (2.0 * (phi / 2.0).sin().abs(), SQRT_2 * (phi - phi_b).sin().abs())
        }
        Family::ThetaB { .. } if on_circle => {
            (latitude_curves(theta, phi).0, spin::disturbance_from_angle(cfg.b.angle_to(o_a)))
        }
        _ => general(),
    }
}

fn is_equator(path: &Path) -> bool {
    matches!(path, Path::Equator { .. })
}

/// `ε = √(2 − 2 cos φ sin θ)`, `η = √(2 − 2 sin²φ sin²θ)`.
fn latitude_curves(theta: f64, phi: f64) -> (f64, f64) {
    let s = theta.sin();
    let eps = (2.0 - 2.0 * phi.cos() * s).max(0.0).sqrt();
    let eta = (2.0 - 2.0 * (phi.sin() * s).powi(2)).max(0.0).sqrt();
    (eps, eta)
}

/// Reconstructed values with one-standard-deviation uncertainties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RowEstimate {
    pub eps: f64,
    pub eps_sd: f64,
    pub eta: f64,
    pub eta_sd: f64,
    pub sigma_a: f64,
    pub sigma_a_sd: f64,
    pub sigma_b: f64,
    pub sigma_b_sd: f64,
    pub eps_failures: usize,
    pub eta_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub phi: f64,
    pub theta: f64,
    pub o_a: UnitAxis,
    pub exact: UncertaintyReport,
    pub theory_eps: f64,
    pub theory_eta: f64,
    pub estimate: Option<RowEstimate>,
    /// Exact port probabilities for input `ψ`.
    pub ports: PortProbabilities,
}

/// Seed of row `index` under master seed `seed`.
pub fn row_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    cfg.points()
        .into_par_iter()
        .enumerate()
        .map(|(index, (theta, phi, o_a))| evaluate_row(cfg, index, theta, phi, o_a))
        .collect()
}

fn evaluate_row(
    cfg: &ScenarioConfig,
    index: usize,
    theta: f64,
    phi: f64,
    o_a: UnitAxis,
) -> Result<SweepRow> {
    let sc = cfg.spin_config(o_a);
    let exact = sc.report();
    let (theory_eps, theory_eta) = theory_curve(cfg, theta, phi, &o_a);
    let estimate = match cfg.mode {
        Mode::Exact => None,
        Mode::ThreeStateExact => {
            let (eps, eta) = threestate::exact_spin_estimates(&sc)?;
            Some(RowEstimate {
                eps,
                eps_sd: 0.0,
                eta,
                eta_sd: 0.0,
                sigma_a: exact.sigma_a,
                sigma_a_sd: 0.0,
                sigma_b: exact.sigma_b,
                sigma_b_sd: 0.0,
                eps_failures: 0,
                eta_failures: 0,
            })
        }
        Mode::MonteCarlo(settings) => {
            let est = beamline::run_with_error_bars(&sc, &settings, row_seed(cfg.seed, index))?;
            Some(RowEstimate {
                eps: est.eps.mean,
                eps_sd: est.eps.sd,
                eta: est.eta.mean,
                eta_sd: est.eta.sd,
                sigma_a: est.sigma_a.mean,
                sigma_a_sd: est.sigma_a.sd,
                sigma_b: est.sigma_b.mean,
                sigma_b_sd: est.sigma_b.sd,
                eps_failures: est.eps_failures,
                eta_failures: est.eta_failures,
            })
        }
    };
    Ok(SweepRow {
        index,
        phi,
        theta,
        o_a,
        exact,
        theory_eps,
        theory_eta,
        estimate,
        ports: beamline::port_probabilities(&cfg.psi, &o_a, &cfg.b),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Error,
    Disturbance,
    Product,
    OzawaSum,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Error => "error",
            Quantity::Disturbance => "disturbance",
            Quantity::Product => "product",
            Quantity::OzawaSum => "ozawa_sum",
        }
    }

    pub fn of(&self, r: &UncertaintyReport) -> f64 {
        match self {
            Quantity::Error => r.eps,
            Quantity::Disturbance => r.eta,
            Quantity::Product => r.heisenberg_lhs,
            Quantity::OzawaSum => r.ozawa_lhs,
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "error" | "eps" => Ok(Quantity::Error),
            "disturbance" | "eta" => Ok(Quantity::Disturbance),
            "product" => Ok(Quantity::Product),
            "ozawa_sum" | "ozawa" => Ok(Quantity::OzawaSum),
            _ => Err(Error::InvalidParameter(format!("unknown quantity {s:?}"))),
        }
    }
}

/// Values on a `θ × φ` grid over the sphere, `θ`-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochGrid {
    pub quantity: Quantity,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub values: Vec<f64>,
}

impl BlochGrid {
    pub fn resolution(&self) -> (usize, usize) {
        (self.thetas.len(), self.phis.len())
    }

    pub fn get(&self, i_theta: usize, i_phi: usize) -> f64 {
        self.values[i_theta * self.phis.len() + i_phi]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluates `quantity` for every `o_a` on a `θ ∈ [0, π]`, `φ ∈ [0, 2π]`
/// grid with both ends included.
pub fn bloch_scan(
    quantity: Quantity,
    a: &UnitAxis,
    b: &UnitAxis,
    psi: &SpinState,
    n_theta: usize,
    n_phi: usize,
) -> Result<BlochGrid> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid resolution {n_theta}×{n_phi} must be at least 2×2"
        )));
    }
    let thetas = linspace(0.0, PI, n_theta);
    let phis = linspace(0.0, TAU, n_phi);
    let values = thetas
        .par_iter()
        .flat_map_iter(|&theta| {
            phis.iter().map(move |&phi| {
                let o = UnitAxis::from_angles(theta, phi);
                quantity.of(&SpinConfig { a: *a, b: *b, psi: *psi, o_a: o }.report())
            })
        })
        .collect();
    Ok(BlochGrid { quantity, thetas, phis, values })
}

/// Closed `φ_OA` range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    /// Membership modulo `2π`.
    pub fn contains(&self, phi: f64) -> bool {
        let p = phi.rem_euclid(TAU);
        [p - TAU, p, p + TAU].iter().any(|q| (self.start..=self.end).contains(q))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationAnalysis {
    pub theta_oa: f64,
    /// `min_φ (εη − ½|⟨[A,B]⟩|)`
    pub min_margin: f64,
    pub argmin_phi: f64,
    pub fulfilled_everywhere: bool,
    /// Ranges of `φ_OA` where `εη` is below the bound.
    pub violated: Vec<Interval>,
}

impl ViolationAnalysis {
    pub fn violated_at(&self, phi: f64) -> bool {
        self.violated.iter().any(|i| i.contains(phi))
    }
}

fn heisenberg_margin(a: &UnitAxis, b: &UnitAxis, psi: &SpinState, theta: f64, phi: f64) -> f64 {
    let o = UnitAxis::from_angles(theta, phi);
    SpinConfig { a: *a, b: *b, psi: *psi, o_a: o }.report().heisenberg_margin()
}

/// Golden-section minimum of `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// Bisects `[lo, hi]` for the sign change of `violated`, `violated(lo) != violated(hi)`.
fn bisect_edge(violated: impl Fn(f64) -> bool, mut lo: f64, mut hi: f64) -> f64 {
    let at_lo = violated(lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if violated(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Scans `φ_OA ∈ [0, 2π]` on the latitude `θ_OA` with `resolution` samples,
/// refines the minimum and the interval edges.
pub fn violation_analysis(
    a: &UnitAxis,
    b: &UnitAxis,
    psi: &SpinState,
    theta_oa: f64,
    resolution: usize,
) -> Result<ViolationAnalysis> {
    if resolution < 3 {
        return Err(Error::InvalidParameter(format!("resolution {resolution} below 3")));
    }
    let margin = |phi: f64| heisenberg_margin(a, b, psi, theta_oa, phi);
    let violated = |phi: f64| margin(phi) < -tolerance::RELATION;
    let phis = linspace(0.0, TAU, resolution);
    let margins: Vec<f64> = phis.iter().map(|&p| margin(p)).collect();

    let (i_min, _) = margins
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &m)| if m < acc.1 { (i, m) } else { acc });
    let lo = phis[i_min.saturating_sub(1)];
    let hi = phis[(i_min + 1).min(resolution - 1)];
    let (mut argmin_phi, mut min_margin) = golden_min(margin, lo, hi);
    if margins[i_min] < min_margin {
        argmin_phi = phis[i_min];
        min_margin = margins[i_min];
    }

    let flags: Vec<bool> = margins.iter().map(|&m| m < -tolerance::RELATION).collect();
    let mut intervals: Vec<Interval> = Vec::new();
    let mut i = 0;
    while i < resolution {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = if i == 0 { phis[0] } else { bisect_edge(violated, phis[i - 1], phis[i]) };
        let mut j = i;
        while j + 1 < resolution && flags[j + 1] {
            j += 1;
        }
        let end = if j == resolution - 1 { phis[j] } else { bisect_edge(violated, phis[j], phis[j + 1]) };
        intervals.push(Interval { start, end });
        i = j + 1;
    }
    // join the run that wraps through φ = 0
    if intervals.len() > 1 && flags[0] && flags[resolution - 1] {
        let first = intervals.remove(0);
        let last = intervals.last_mut().expect("more than one interval");
        last.end = first.end + TAU;
    }

    Ok(ViolationAnalysis {
        theta_oa,
        min_margin,
        argmin_phi,
        fulfilled_everywhere: min_margin >= -tolerance::RELATION,
        violated: intervals,
    })
}

/// Bisection on `θ_OA ∈ [lo, hi]` for the boundary of "fulfilled
/// everywhere"; requires fulfilled at `lo` and violated at `hi`.
pub fn violation_threshold(
    a: &UnitAxis,
    b: &UnitAxis,
    psi: &SpinState,
    lo: f64,
    hi: f64,
    tol: f64,
    resolution: usize,
) -> Result<f64> {
    let fulfilled = |theta: f64| -> Result<bool> {
        Ok(violation_analysis(a, b, psi, theta, resolution)?.fulfilled_everywhere)
    };
    if !fulfilled(lo)? || fulfilled(hi)? {
        return Err(Error::InvalidParameter(format!(
            "threshold not bracketed by θ_OA ∈ [{lo}, {hi}]"
        )));
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if fulfilled(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
