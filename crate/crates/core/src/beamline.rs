//! Simulated two-apparatus spin polarimetry experiment.
//!
//! Apparatus A1 projectively measures `O_A = o_a·σ` and re-prepares the
//! measured eigenstate; A2 then measures `B = b·σ`. The four output ports
//! `(++), (+−), (−+), (−−)` are counted one setting after the other.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::qmcore::{rotate, SpinState, UnitAxis};
use crate::spin::SpinConfig;
use crate::threestate::{self, Expectations};
use crate::{Error, Result};

/// Probabilities of the four output ports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PortProbabilities {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl PortProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn sum(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Ports of a four-port run, reduced to `(⟨O_A⟩, ⟨O_B⟩)`.
    pub fn reduce(&self) -> (f64, f64) {
        reduce_intensities(self.as_array())
    }
}

/// `p_mn = ‖Π^B_n M_m ψ‖²`: Born probability of `O_A = m`, then of `B = n`
/// in the collapsed eigenstate `|m o_a⟩`.
pub fn port_probabilities(psi: &SpinState, o_a: &UnitAxis, b: &UnitAxis) -> PortProbabilities {
    let r = psi.bloch();
    let first = o_a.dot_bloch(&r);
    let second = b.dot(o_a);
    let p = |m: f64, n: f64| 0.25 * (1.0 + m * first) * (1.0 + n * m * second);
    PortProbabilities {
        p_pp: p(1.0, 1.0),
        p_pm: p(1.0, -1.0),
        p_mp: p(-1.0, 1.0),
        p_mm: p(-1.0, -1.0),
    }
}

/// Counts of one four-port run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CountRecord {
    /// `(++), (+−), (−+), (−−)`
    pub counts: [u64; 4],
    /// Seconds per port setting.
    pub exposure: f64,
    /// Counts per second entering the apparatus.
    pub mean_rate: f64,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImperfectionModel {
    /// Visibility of every measured expectation value.
    pub efficiency: f64,
    /// Standard deviation of each rotation angle, radians.
    pub angle_jitter_sigma: f64,
    pub rng_seed: u64,
}

impl Default for ImperfectionModel {
    fn default() -> Self {
        ImperfectionModel {
            efficiency: 0.96,
            angle_jitter_sigma: 1.5_f64.to_radians(),
            rng_seed: 0,
        }
    }
}

impl ImperfectionModel {
    pub fn new(efficiency: f64, angle_jitter_sigma: f64, rng_seed: u64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "efficiency {efficiency} outside (0, 1]"
            )));
        }
        if !(angle_jitter_sigma >= 0.0 && angle_jitter_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "angle jitter {angle_jitter_sigma} must be finite and non-negative"
            )));
        }
        Ok(ImperfectionModel { efficiency, angle_jitter_sigma, rng_seed })
    }

    /// Perfect visibility, no jitter.
    pub fn ideal() -> Self {
        ImperfectionModel { efficiency: 1.0, angle_jitter_sigma: 0.0, rng_seed: 0 }
    }

    /// Perturbs polar and azimuthal angle of `axis` independently.
    pub fn jitter_axis<R: Rng + ?Sized>(&self, axis: &UnitAxis, rng: &mut R) -> UnitAxis {
        if self.angle_jitter_sigma == 0.0 {
            return *axis;
        }
        let normal = Normal::new(0.0, self.angle_jitter_sigma).expect("validated sigma");
        let (theta, phi) = axis.angles();
        UnitAxis::from_angles(theta + normal.sample(rng), phi + normal.sample(rng))
    }

    /// Port probabilities seen through the finite visibility: each
    /// expectation value shrinks by `efficiency`.
    pub fn degrade(&self, p: &PortProbabilities) -> PortProbabilities {
        let e = self.efficiency;
        let mix = |x: f64| e * x + 0.25 * (1.0 - e);
        PortProbabilities {
            p_pp: mix(p.p_pp),
            p_pm: mix(p.p_pm),
            p_mp: mix(p.p_mp),
            p_mm: mix(p.p_mm),
        }
    }
}

/// Prepares the spin state pointing along `axis` from `|+z⟩` with a polar
/// rotation about `y` followed by an azimuthal one about `z`.
pub fn prepare(axis: &UnitAxis) -> SpinState {
    let (theta, phi) = axis.angles();
    let tilted = rotate(&UnitAxis::Y, -theta / 2.0, &SpinState::plus_z());
    rotate(&UnitAxis::Z, -phi / 2.0, &tilted)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

fn check_exposure(exposure: f64, mean_rate: f64) -> Result<()> {
    if !(exposure > 0.0 && exposure.is_finite() && mean_rate > 0.0 && mean_rate.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "exposure {exposure} and mean rate {mean_rate} must be positive"
        )));
    }
    Ok(())
}

/// Independent Poisson counts per port with mean
/// `mean_rate·exposure·p_port`, after the efficiency model. Angle jitter
/// enters through the axes used to compute `probs`.
pub fn simulate_counts<R: Rng + ?Sized>(
    probs: &PortProbabilities,
    exposure: f64,
    mean_rate: f64,
    imperfections: &ImperfectionModel,
    rng: &mut R,
) -> Result<CountRecord> {
    check_exposure(exposure, mean_rate)?;
    let n = exposure * mean_rate;
    let seen = imperfections.degrade(probs).as_array();
    let counts = seen.map(|p| poisson(n * p, rng));
    Ok(CountRecord { counts, exposure, mean_rate })
}

fn reduce_intensities(i: [f64; 4]) -> (f64, f64) {
    let total: f64 = i.iter().sum();
    ((i[0] + i[1] - i[2] - i[3]) / total, (i[0] + i[2] - i[1] - i[3]) / total)
}

fn correct(raw: f64, efficiency: f64) -> f64 {
    (raw / efficiency).clamp(-1.0, 1.0)
}

/// `⟨O_A⟩` and `⟨O_B⟩` from one four-port run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PortExpectations {
    pub o_a: f64,
    pub o_b: f64,
}

pub fn expectations_from_counts(
    counts: &CountRecord,
    imperfections: &ImperfectionModel,
) -> Result<PortExpectations> {
    if counts.total() == 0 {
        return Err(Error::ZeroCounts);
    }
    Ok(expectations_from_intensities(counts.counts.map(|c| c as f64), imperfections))
}

fn expectations_from_intensities(i: [f64; 4], imp: &ImperfectionModel) -> PortExpectations {
    let (a, b) = reduce_intensities(i);
    PortExpectations { o_a: correct(a, imp.efficiency), o_b: correct(b, imp.efficiency) }
}

/// Which apparatus is left active when a single projective stage is used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Apparatus {
    /// A2 switched off; A1's two ports.
    A1,
    /// A1 removed; A2's two ports.
    A2,
}

/// `(I₊ − I₋)/(I₊ + I₋)` of a single ideal stage, i.e. `⟨axis·σ⟩_ψ`.
pub fn single_axis_expectation(psi: &SpinState, axis: &UnitAxis, _which: Apparatus) -> f64 {
    let p_plus = 0.5 * (1.0 + axis.dot_bloch(&psi.bloch()));
    (2.0 * p_plus - 1.0).clamp(-1.0, 1.0)
}

/// Expected intensities, or Poisson counts over a finite exposure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counting {
    /// Intensities equal to the port probabilities (infinite counts).
    Ideal,
    Poisson { exposure: f64, mean_rate: f64 },
}

impl Counting {
    /// `counts` expected counts entering each port setting.
    pub fn per_setting(counts: f64) -> Self {
        Counting::Poisson { exposure: 1.0, mean_rate: counts }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloSettings {
    pub counting: Counting,
    pub replicates: usize,
    pub imperfections: ImperfectionModel,
}

impl Default for MonteCarloSettings {
    fn default() -> Self {
        MonteCarloSettings {
            counting: Counting::per_setting(4000.0),
            replicates: 100,
            imperfections: ImperfectionModel::default(),
        }
    }
}

/// One simulated four-port run on `state` with jittered preparation and
/// analysis axes.
pub fn measure_ports<R: Rng + ?Sized>(
    state: &SpinState,
    o_a: &UnitAxis,
    b: &UnitAxis,
    settings: &MonteCarloSettings,
    rng: &mut R,
) -> Result<PortExpectations> {
    let imp = &settings.imperfections;
    let prepared = prepare(&imp.jitter_axis(&state.axis(), rng));
    let o = imp.jitter_axis(o_a, rng);
    let bb = imp.jitter_axis(b, rng);
    let probs = port_probabilities(&prepared, &o, &bb);
    match settings.counting {
        Counting::Ideal => Ok(expectations_from_intensities(imp.degrade(&probs).as_array(), imp)),
        Counting::Poisson { exposure, mean_rate } => {
            let counts = simulate_counts(&probs, exposure, mean_rate, imp, rng)?;
            expectations_from_counts(&counts, imp)
        }
    }
}

/// Single-stage estimate of `⟨axis·σ⟩_ψ` from the two ports.
pub fn measure_single_axis<R: Rng + ?Sized>(
    psi: &SpinState,
    axis: &UnitAxis,
    which: Apparatus,
    settings: &MonteCarloSettings,
    rng: &mut R,
) -> Result<f64> {
    let imp = &settings.imperfections;
    let prepared = prepare(&imp.jitter_axis(&psi.axis(), rng));
    let n = imp.jitter_axis(axis, rng);
    let ideal = single_axis_expectation(&prepared, &n, which);
    let seen = imp.efficiency * ideal;
    let raw = match settings.counting {
        Counting::Ideal => seen,
        Counting::Poisson { exposure, mean_rate } => {
            check_exposure(exposure, mean_rate)?;
            let total = exposure * mean_rate;
            let plus = poisson(total * 0.5 * (1.0 + seen), rng) as f64;
            let minus = poisson(total * 0.5 * (1.0 - seen), rng) as f64;
            if plus + minus == 0.0 {
                return Err(Error::ZeroCounts);
            }
            (plus - minus) / (plus + minus)
        }
    };
    Ok(correct(raw, imp.efficiency))
}

/// Estimates from one replicate of the full pipeline.
#[derive(Clone, Copy, Debug)]
pub struct Replicate {
    pub eps: Option<f64>,
    pub eta: Option<f64>,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

fn measured(
    state: Option<SpinState>,
    cfg: &SpinConfig,
    settings: &MonteCarloSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Option<PortExpectations>> {
    state.map(|s| measure_ports(&s, &cfg.o_a, &cfg.b, settings, rng)).transpose()
}

/// State preparation, four-port counting of the five input states,
/// reduction and three-state reconstruction.
pub fn run_replicate(
    cfg: &SpinConfig,
    settings: &MonteCarloSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Replicate> {
    let sa = threestate::auxiliary_states(&crate::Operator2::spin(&cfg.a), &cfg.psi);
    let sb = threestate::auxiliary_states(&crate::Operator2::spin(&cfg.b), &cfg.psi);
    let base = measure_ports(&cfg.psi, &cfg.o_a, &cfg.b, settings, rng)?;
    let a_t = measured(sa.transformed, cfg, settings, rng)?;
    let a_s = measured(sa.shifted, cfg, settings, rng)?;
    let b_t = measured(sb.transformed, cfg, settings, rng)?;
    let b_s = measured(sb.shifted, cfg, settings, rng)?;

    let ea = Expectations {
        base: base.o_a,
        transformed: a_t.map_or(0.0, |e| e.o_a),
        shifted: a_s.map_or(0.0, |e| e.o_a),
    };
    let eb = Expectations {
        base: base.o_b,
        transformed: b_t.map_or(0.0, |e| e.o_b),
        shifted: b_s.map_or(0.0, |e| e.o_b),
    };
    let mean_a = measure_single_axis(&cfg.psi, &cfg.a, Apparatus::A1, settings, rng)?;
    let mean_b = measure_single_axis(&cfg.psi, &cfg.b, Apparatus::A2, settings, rng)?;
    Ok(Replicate {
        eps: threestate::estimate_error(&ea, &sa.norms).ok(),
        eta: threestate::estimate_disturbance(&eb, &sb.norms).ok(),
        sigma_a: (1.0 - mean_a * mean_a).max(0.0).sqrt(),
        sigma_b: (1.0 - mean_b * mean_b).max(0.0).sqrt(),
    })
}

/// Sample mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Statistic {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl Statistic {
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(Statistic { mean, sd, n })
    }

    /// `|mean − target| ≤ k·sd`.
    pub fn covers(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.sd
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub eps: Statistic,
    pub eta: Statistic,
    pub sigma_a: Statistic,
    pub sigma_b: Statistic,
    pub replicates: usize,
    /// Replicates whose reconstructed `ε²` fell below the radicand floor.
    pub eps_failures: usize,
    pub eta_failures: usize,
}

/// Seed of replicate `index` under master seed `seed`.
pub fn replicate_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

/// Means and sample standard deviations over independent replicates,
/// evaluated in parallel with per-replicate seeds `seed + index`.
pub fn run_with_error_bars(
    cfg: &SpinConfig,
    settings: &MonteCarloSettings,
    seed: u64,
) -> Result<Estimate> {
    if settings.replicates < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 replicates, got {}",
            settings.replicates
        )));
    }
    let reps: Vec<Replicate> = (0..settings.replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(replicate_seed(seed, i));
            run_replicate(cfg, settings, &mut rng)
        })
        .collect::<Result<_>>()?;
    let eps: Vec<f64> = reps.iter().filter_map(|r| r.eps).collect();
    let eta: Vec<f64> = reps.iter().filter_map(|r| r.eta).collect();
    let sa: Vec<f64> = reps.iter().map(|r| r.sigma_a).collect();
    let sb: Vec<f64> = reps.iter().map(|r| r.sigma_b).collect();
    let stat = |xs: &[f64]| Statistic::from_samples(xs).ok_or(Error::EmptyResults);
    Ok(Estimate {
        eps: stat(&eps)?,
        eta: stat(&eta)?,
        sigma_a: stat(&sa)?,
        sigma_b: stat(&sb)?,
        replicates: settings.replicates,
        eps_failures: reps.len() - eps.len(),
        eta_failures: reps.len() - eta.len(),
    })
}
