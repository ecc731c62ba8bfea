//! Scenario files.
//!
//! A scenario is a TOML document with an optional `preset` and up to five
//! sections. Every key is optional when a preset supplies it:
//!
//! ```toml
//! name = "latitude-run"
//! preset = "standard"
//!
//! [observables]
//! a = "x"                                  # name, vector or {theta, phi}
//! b = { theta = "90 deg", phi = "pi/3 rad" }
//!
//! [state]
//! axis = [0, 0, 1]                         # Bloch direction of ψ
//!
//! [path]
//! kind = "latitude"                        # equator | latitude | custom
//! theta = "60 deg"
//! phi_start = "0 deg"
//! phi_end = "360 deg"
//! samples = 361
//!
//! [apparatus]
//! mode = "monte_carlo"                     # exact | three_state | monte_carlo
//! efficiency = 0.96
//! jitter = "1.5 deg"
//! counts_per_setting = 4000                # or exposure + mean_rate
//! replicates = 100
//! seed = 7
//!
//! [output]
//! format = "csv"                           # csv | json
//! directory = "out"
//! stem = "latitude-run"
//! ```
//!
//! Angles are strings with a `deg` or `rad` suffix; the numeric part may be
//! a decimal or a multiple of `pi` such as `-3pi/4`. Vector axes are
//! normalized. Errors carry the line of the offending key.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::Range;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::beamline::{Counting, ImperfectionModel, MonteCarloSettings};
use crate::output::Format;
use crate::qmcore::{SpinState, UnitAxis};
use crate::sweep::{Family, Mode, Path, Preset, ScenarioConfig, DEFAULT_SAMPLES};
use crate::{Error, Result};

pub const DEFAULT_EFFICIENCY: f64 = 0.96;
pub const DEFAULT_JITTER_DEG: f64 = 1.5;
pub const DEFAULT_COUNTS_PER_SETTING: f64 = 4000.0;
pub const DEFAULT_REPLICATES: usize = 100;

/// Where and how results are written.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputSpec {
    pub format: Format,
    pub directory: Option<PathBuf>,
    pub stem: String,
}

/// Fully validated scenario file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub preset: Option<Preset>,
    pub scenario: ScenarioConfig,
    pub imperfections: ImperfectionModel,
    pub output: OutputSpec,
    /// `key = value` for every setting filled from a default.
    pub defaults_applied: Vec<String>,
}

impl RunConfig {
    /// Preset with every other setting at its default.
    pub fn from_preset(preset: Preset) -> Self {
        let scenario = preset.config();
        let output = OutputSpec { format: Format::Csv, directory: None, stem: scenario.name.clone() };
        let mut defaults = Vec::new();
        apparatus_defaults(&mut defaults);
        RunConfig {
            preset: Some(preset),
            scenario,
            imperfections: ImperfectionModel::default(),
            output,
            defaults_applied: defaults,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.imperfections.rng_seed = seed;
        if let Mode::MonteCarlo(s) = &mut self.scenario.mode {
            s.imperfections.rng_seed = seed;
        }
    }

    pub fn set_samples(&mut self, samples: usize) -> Result<()> {
        if matches!(self.scenario.path, Path::Custom { .. }) {
            return Err(Error::InvalidParameter("samples cannot be set on a custom path".into()));
        }
        let previous = std::mem::replace(&mut self.scenario.samples, samples);
        self.scenario.validate().inspect_err(|_| self.scenario.samples = previous)
    }

    /// Switches to Monte Carlo mode if needed and sets the replicate count.
    pub fn set_replicates(&mut self, replicates: usize) -> Result<()> {
        if replicates < 2 {
            return Err(Error::InvalidParameter(format!(
                "replicates must be at least 2, got {replicates}"
            )));
        }
        match &mut self.scenario.mode {
            Mode::MonteCarlo(s) => s.replicates = replicates,
            mode => {
                *mode = Mode::MonteCarlo(MonteCarloSettings {
                    counting: Counting::per_setting(DEFAULT_COUNTS_PER_SETTING),
                    replicates,
                    imperfections: self.imperfections,
                })
            }
        }
        Ok(())
    }
}

fn apparatus_defaults(out: &mut Vec<String>) {
    out.extend(
        [
            "apparatus.mode = exact".to_string(),
            format!("apparatus.efficiency = {DEFAULT_EFFICIENCY}"),
            format!("apparatus.jitter = {DEFAULT_JITTER_DEG} deg"),
            format!("apparatus.counts_per_setting = {DEFAULT_COUNTS_PER_SETTING}"),
            format!("apparatus.replicates = {DEFAULT_REPLICATES}"),
            "apparatus.seed = 0".to_string(),
        ],
    );
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<Spanned<String>>,
    preset: Option<Spanned<String>>,
    observables: Option<Spanned<RawObservables>>,
    state: Option<Spanned<RawState>>,
    path: Option<Spanned<RawPath>>,
    apparatus: Option<Spanned<RawApparatus>>,
    output: Option<Spanned<RawOutput>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObservables {
    a: Option<Spanned<AxisSpec>>,
    b: Option<Spanned<AxisSpec>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawState {
    axis: Option<Spanned<AxisSpec>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    kind: Option<Spanned<String>>,
    theta: Option<Spanned<AngleSpec>>,
    phi_start: Option<Spanned<AngleSpec>>,
    phi_end: Option<Spanned<AngleSpec>>,
    samples: Option<Spanned<i64>>,
    axes: Option<Spanned<Vec<Spanned<AxisSpec>>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawApparatus {
    mode: Option<Spanned<String>>,
    efficiency: Option<Spanned<f64>>,
    jitter: Option<Spanned<AngleSpec>>,
    counts_per_setting: Option<Spanned<f64>>,
    exposure: Option<Spanned<f64>>,
    mean_rate: Option<Spanned<f64>>,
    replicates: Option<Spanned<i64>>,
    seed: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    format: Option<Spanned<String>>,
    directory: Option<String>,
    stem: Option<String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AxisSpec {
    Name(String),
    Vector(Vec<f64>),
    Angles(RawAngles),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAngles {
    theta: AngleSpec,
    phi: AngleSpec,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AngleSpec {
    Text(String),
    Number(f64),
}

/// Maps byte offsets to 1-based line numbers.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line(&self, span: &Range<usize>) -> usize {
        let end = span.start.min(self.text.len());
        self.text.as_bytes()[..end].iter().filter(|&&c| c == b'\n').count() + 1
    }

    fn err(&self, span: &Range<usize>, message: impl Into<String>) -> Error {
        Error::Config { line: self.line(span), message: message.into() }
    }

    fn at<T>(&self, s: &Spanned<T>, message: impl Into<String>) -> Error {
        self.err(&s.span(), message)
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let src = Source { text };
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| src.line(&s));
        Error::Config { line, message: e.message().trim().to_string() }
    })?;
    let mut defaults = Vec::new();

    let preset = match &raw.preset {
        Some(p) => Some(p.get_ref().parse::<Preset>().map_err(|e| src.at(p, e.to_string()))?),
        None => None,
    };
    let base = preset.map(|p| p.config());

    let (a, b, observables_given) = observables(&src, raw.observables.as_ref(), base.as_ref())?;
    let psi = state(&src, raw.state.as_ref(), base.as_ref())?;
    let (path, samples) = path(&src, raw.path.as_ref(), base.as_ref(), &mut defaults)?;

    let family = match &base {
        Some(cfg) if !observables_given => cfg.family,
        _ => infer_family(&a, &b),
    };
    let name = match (&raw.name, &base) {
        (Some(n), _) => n.get_ref().clone(),
        (None, Some(cfg)) => cfg.name.clone(),
        (None, None) => "scenario".to_string(),
    };

    let (mode, imperfections, seed) = apparatus(&src, raw.apparatus.as_ref(), &mut defaults)?;
    let output = output(&src, raw.output.as_ref(), &name, &mut defaults)?;

    let scenario = ScenarioConfig { name, a, b, psi, path, samples, mode, family, seed };
    scenario.validate().map_err(|e| {
        let line = raw.path.as_ref().map_or(1, |p| src.line(&p.span()));
        Error::Config { line, message: e.to_string() }
    })?;
    Ok(RunConfig { preset, scenario, imperfections, output, defaults_applied: defaults })
}

fn observables(
    src: &Source,
    raw: Option<&Spanned<RawObservables>>,
    base: Option<&ScenarioConfig>,
) -> Result<(UnitAxis, UnitAxis, bool)> {
    let section_line = raw.map_or(0..0, |r| r.span());
    let given = raw.map(|r| r.get_ref());
    let pick = |spec: Option<&Spanned<AxisSpec>>, fallback: Option<UnitAxis>, key: &str| match spec {
        Some(s) => axis(src, s),
        None => fallback
            .ok_or_else(|| src.err(&section_line, format!("missing required axis observables.{key}"))),
    };
    let a_spec = given.and_then(|o| o.a.as_ref());
    let b_spec = given.and_then(|o| o.b.as_ref());
    let a = pick(a_spec, base.map(|c| c.a), "a")?;
    let b = pick(b_spec, base.map(|c| c.b), "b")?;
    Ok((a, b, a_spec.is_some() || b_spec.is_some()))
}

fn state(
    src: &Source,
    raw: Option<&Spanned<RawState>>,
    base: Option<&ScenarioConfig>,
) -> Result<SpinState> {
    match (raw.and_then(|s| s.get_ref().axis.as_ref()), base) {
        (Some(spec), _) => Ok(SpinState::eigenstate(&axis(src, spec)?)),
        (None, Some(cfg)) => Ok(cfg.psi),
        (None, None) => {
            let span = raw.map_or(0..0, |r| r.span());
            Err(src.err(&span, "missing required axis state.axis"))
        }
    }
}

fn path(
    src: &Source,
    raw: Option<&Spanned<RawPath>>,
    base: Option<&ScenarioConfig>,
    defaults: &mut Vec<String>,
) -> Result<(Path, usize)> {
    let Some(section) = raw else {
        return Ok(match base {
            Some(cfg) => (cfg.path.clone(), cfg.samples),
            None => {
                defaults.push("path.kind = equator".into());
                defaults.push(format!("path.samples = {DEFAULT_SAMPLES}"));
                (Path::equator(), DEFAULT_SAMPLES)
            }
        });
    };
    let p = section.get_ref();

    let samples = match &p.samples {
        Some(s) => {
            let n = *s.get_ref();
            if n < 2 {
                return Err(src.at(s, format!("samples must be at least 2, got {n}")));
            }
            Some(n as usize)
        }
        None => None,
    };

    let shape_given =
        p.kind.is_some() || p.theta.is_some() || p.phi_start.is_some() || p.phi_end.is_some() || p.axes.is_some();
    if !shape_given {
        let (path, base_samples) = match base {
            Some(cfg) => (cfg.path.clone(), cfg.samples),
            None => {
                defaults.push("path.kind = equator".into());
                (Path::equator(), DEFAULT_SAMPLES)
            }
        };
        if samples.is_none() && base.is_none() {
            defaults.push(format!("path.samples = {DEFAULT_SAMPLES}"));
        }
        if let (Path::Custom { .. }, Some(s)) = (&path, &p.samples) {
            return Err(src.at(s, "conflicting path specs: samples given for a custom path"));
        }
        return Ok((path, samples.unwrap_or(base_samples)));
    }

    let kind = match &p.kind {
        Some(k) => match k.get_ref().to_ascii_lowercase().as_str() {
            "equator" => "equator",
            "latitude" => "latitude",
            "custom" => "custom",
            other => {
                return Err(src.at(
                    k,
                    format!("unknown path kind {other:?}; expected equator, latitude or custom"),
                ))
            }
        },
        None => match (&p.theta, &p.axes) {
            (Some(_), Some(ax)) => {
                return Err(src.at(ax, "conflicting path specs: both theta and axes given"))
            }
            (Some(_), None) => "latitude",
            (None, Some(_)) => "custom",
            (None, None) => "equator",
        },
    };

    if kind == "custom" {
        let conflict = [
            p.theta.as_ref().map(|s| s.span()),
            p.phi_start.as_ref().map(|s| s.span()),
            p.phi_end.as_ref().map(|s| s.span()),
            p.samples.as_ref().map(|s| s.span()),
        ];
        if let Some(span) = conflict.into_iter().flatten().next() {
            return Err(src.err(&span, "conflicting path specs: custom paths take only axes"));
        }
        let Some(list) = &p.axes else {
            return Err(src.err(&section.span(), "custom path needs axes"));
        };
        if list.get_ref().is_empty() {
            return Err(src.at(list, "custom path has no axes"));
        }
        let axes = list.get_ref().iter().map(|s| axis(src, s)).collect::<Result<Vec<_>>>()?;
        let n = axes.len();
        return Ok((Path::Custom { axes }, n));
    }

    if let Some(ax) = &p.axes {
        return Err(src.at(ax, format!("conflicting path specs: axes given for a {kind} path")));
    }
    let phi_start = optional_angle(src, p.phi_start.as_ref(), 0.0)?;
    let phi_end = optional_angle(src, p.phi_end.as_ref(), TAU)?;
    let path = if kind == "latitude" {
        let Some(t) = &p.theta else {
            return Err(src.err(&section.span(), "latitude path needs theta"));
        };
        let theta = angle(src, t)?;
        if !(0.0..=PI).contains(&theta) {
            return Err(src.at(t, format!("theta {theta} rad outside [0, pi]")));
        }
        Path::Latitude { theta, phi_start, phi_end }
    } else {
        if let Some(t) = &p.theta {
            if (angle(src, t)? - FRAC_PI_2).abs() > 1e-12 {
                return Err(src.at(t, "conflicting path specs: theta given for an equator path"));
            }
        }
        Path::Equator { phi_start, phi_end }
    };
    let samples = samples.unwrap_or_else(|| {
        defaults.push(format!("path.samples = {DEFAULT_SAMPLES}"));
        DEFAULT_SAMPLES
    });
    Ok((path, samples))
}

fn apparatus(
    src: &Source,
    raw: Option<&Spanned<RawApparatus>>,
    defaults: &mut Vec<String>,
) -> Result<(Mode, ImperfectionModel, u64)> {
    let Some(section) = raw else {
        apparatus_defaults(defaults);
        return Ok((Mode::Exact, ImperfectionModel::default(), 0));
    };
    let a = section.get_ref();

    let efficiency = match &a.efficiency {
        Some(e) => *e.get_ref(),
        None => {
            defaults.push(format!("apparatus.efficiency = {DEFAULT_EFFICIENCY}"));
            DEFAULT_EFFICIENCY
        }
    };
    let jitter = match &a.jitter {
        Some(j) => angle(src, j)?,
        None => {
            defaults.push(format!("apparatus.jitter = {DEFAULT_JITTER_DEG} deg"));
            DEFAULT_JITTER_DEG.to_radians()
        }
    };
    let seed = match &a.seed {
        Some(s) if *s.get_ref() < 0 => return Err(src.at(s, "seed must be non-negative")),
        Some(s) => *s.get_ref() as u64,
        None => {
            defaults.push("apparatus.seed = 0".into());
            0
        }
    };
    let imperfections = ImperfectionModel::new(efficiency, jitter, seed).map_err(|e| {
        let span = match (&a.efficiency, &a.jitter) {
            (Some(e), _) if !(*e.get_ref() > 0.0 && *e.get_ref() <= 1.0) => e.span(),
            (_, Some(j)) => j.span(),
            _ => section.span(),
        };
        src.err(&span, e.to_string())
    })?;

    let counting = match (&a.counts_per_setting, &a.exposure, &a.mean_rate) {
        (Some(c), None, None) => {
            positive(src, c, "counts_per_setting")?;
            Counting::per_setting(*c.get_ref())
        }
        (Some(c), _, _) => {
            return Err(src.at(c, "conflicting counting specs: counts_per_setting with exposure/mean_rate"))
        }
        (None, Some(e), Some(r)) => {
            positive(src, e, "exposure")?;
            positive(src, r, "mean_rate")?;
            Counting::Poisson { exposure: *e.get_ref(), mean_rate: *r.get_ref() }
        }
        (None, Some(e), None) => return Err(src.at(e, "exposure needs mean_rate")),
        (None, None, Some(r)) => return Err(src.at(r, "mean_rate needs exposure")),
        (None, None, None) => {
            defaults.push(format!("apparatus.counts_per_setting = {DEFAULT_COUNTS_PER_SETTING}"));
            Counting::per_setting(DEFAULT_COUNTS_PER_SETTING)
        }
    };
    let replicates = match &a.replicates {
        Some(r) if *r.get_ref() < 2 => {
            return Err(src.at(r, format!("replicates must be at least 2, got {}", r.get_ref())))
        }
        Some(r) => *r.get_ref() as usize,
        None => {
            defaults.push(format!("apparatus.replicates = {DEFAULT_REPLICATES}"));
            DEFAULT_REPLICATES
        }
    };
    let mode = match &a.mode {
        None => {
            defaults.push("apparatus.mode = exact".into());
            Mode::Exact
        }
        Some(m) => match m.get_ref().to_ascii_lowercase().replace('-', "_").as_str() {
            "exact" => Mode::Exact,
            "three_state" => Mode::ThreeStateExact,
            "monte_carlo" => Mode::MonteCarlo(MonteCarloSettings { counting, replicates, imperfections }),
            other => {
                return Err(src.at(
                    m,
                    format!("unknown mode {other:?}; expected exact, three_state or monte_carlo"),
                ))
            }
        },
    };
    Ok((mode, imperfections, seed))
}

fn output(
    src: &Source,
    raw: Option<&Spanned<RawOutput>>,
    name: &str,
    defaults: &mut Vec<String>,
) -> Result<OutputSpec> {
    let o = raw.map(|r| r.get_ref());
    let format = match o.and_then(|o| o.format.as_ref()) {
        Some(f) => f.get_ref().parse::<Format>().map_err(|e| src.at(f, e.to_string()))?,
        None => {
            defaults.push("output.format = csv".into());
            Format::Csv
        }
    };
    Ok(OutputSpec {
        format,
        directory: o.and_then(|o| o.directory.as_ref()).map(PathBuf::from),
        stem: o.and_then(|o| o.stem.clone()).unwrap_or_else(|| name.to_string()),
    })
}

fn positive(src: &Source, v: &Spanned<f64>, key: &str) -> Result<()> {
    let x = *v.get_ref();
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(src.at(v, format!("{key} must be positive and finite, got {x}")))
    }
}

fn optional_angle(src: &Source, spec: Option<&Spanned<AngleSpec>>, default: f64) -> Result<f64> {
    spec.map_or(Ok(default), |s| angle(src, s))
}

fn angle(src: &Source, spec: &Spanned<AngleSpec>) -> Result<f64> {
    resolve_angle(spec.get_ref()).map_err(|m| src.at(spec, m))
}

fn resolve_angle(spec: &AngleSpec) -> std::result::Result<f64, String> {
    match spec {
        AngleSpec::Number(x) => Err(format!(
            "angle {x} has no unit; write e.g. \"{x} deg\" or \"{x} rad\""
        )),
        AngleSpec::Text(s) => parse_angle(s),
    }
}

/// Parses `"<value> deg"`, `"<value>°"` or `"<value> rad"`, where the value
/// is a decimal or `[k][*]pi[/n]`.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    let (value, to_rad) = if let Some(v) = t.strip_suffix("deg") {
        (v, PI / 180.0)
    } else if let Some(v) = t.strip_suffix('°') {
        (v, PI / 180.0)
    } else if let Some(v) = t.strip_suffix("rad") {
        (v, 1.0)
    } else {
        return Err(format!("angle {text:?} needs a unit suffix (deg or rad)"));
    };
    let x = parse_scalar(value.trim()).ok_or_else(|| format!("cannot read angle {text:?}"))?;
    if x.is_finite() {
        Ok(x * to_rad)
    } else {
        Err(format!("angle {text:?} is not finite"))
    }
}

fn parse_scalar(s: &str) -> Option<f64> {
    if let Ok(x) = s.parse::<f64>() {
        return Some(x);
    }
    let s: String = s.replace('π', "pi").chars().filter(|c| !c.is_whitespace()).collect();
    let at = s.find("pi")?;
    let (head, tail) = (&s[..at], &s[at + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let k = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().ok()?,
    };
    let d = match tail {
        "" => 1.0,
        t => t.strip_prefix('/')?.parse::<f64>().ok()?,
    };
    (d != 0.0).then_some(k * PI / d)
}

fn axis(src: &Source, spec: &Spanned<AxisSpec>) -> Result<UnitAxis> {
    resolve_axis(spec.get_ref()).map_err(|m| src.at(spec, m))
}

fn resolve_axis(spec: &AxisSpec) -> std::result::Result<UnitAxis, String> {
    match spec {
        AxisSpec::Name(n) => named_axis(n),
        AxisSpec::Vector(v) => match v.as_slice() {
            [x, y, z] => UnitAxis::normalized(*x, *y, *z).map_err(|e| e.to_string()),
            _ => Err(format!("axis vector needs 3 components, got {}", v.len())),
        },
        AxisSpec::Angles(RawAngles { theta, phi }) => {
            Ok(UnitAxis::from_angles(resolve_angle(theta)?, resolve_angle(phi)?))
        }
    }
}

fn named_axis(name: &str) -> std::result::Result<UnitAxis, String> {
    let n = name.trim().to_ascii_lowercase();
    let (sign, body) = match n.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, n.strip_prefix('+').unwrap_or(&n)),
    };
    let axis = match body {
        "x" | "sigma_x" => UnitAxis::X,
        "y" | "sigma_y" => UnitAxis::Y,
        "z" | "sigma_z" => UnitAxis::Z,
        _ => return Err(format!("unknown axis {name:?}; use x, y, z, a vector or {{theta, phi}}")),
    };
    Ok(if sign < 0.0 { -axis } else { axis })
}

/// Family whose printed theory curve applies to `(a, b)`.
pub fn infer_family(a: &UnitAxis, b: &UnitAxis) -> Family {
    const TOL: f64 = 1e-12;
    let near = |u: &UnitAxis, v: &UnitAxis| {
        u.to_array().iter().zip(v.to_array()).all(|(p, q)| (p - q).abs() <= TOL)
    };
    if !near(a, &UnitAxis::X) {
        return Family::General;
    }
    if near(b, &UnitAxis::Y) {
        Family::Standard
    } else if b.z().abs() <= TOL {
        Family::PhiB { phi_b: b.y().atan2(b.x()) }
    } else if b.x().abs() <= TOL && b.y() >= 0.0 {
        Family::ThetaB { theta_b: b.y().atan2(b.z()) }
    } else {
        Family::General
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn config_line(text: &str) -> usize {
        match parse_config(text) {
            Err(Error::Config { line, .. }) => line,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn angles_with_units() {
        assert_abs_diff_eq!(parse_angle("90 deg").unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("30°").unwrap(), FRAC_PI_6, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("pi/3 rad").unwrap(), FRAC_PI_3, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("-3pi/4 rad").unwrap(), -3.0 * FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("2*pi rad").unwrap(), TAU, epsilon = 1e-15);
        assert_abs_diff_eq!(parse_angle("0.5rad").unwrap(), 0.5, epsilon = 1e-15);
        assert!(parse_angle("90").is_err());
        assert!(parse_angle("pi/0 rad").is_err());
        assert!(parse_angle("abc deg").is_err());
    }

    #[test]
    fn standard_preset() {
        let cfg = parse_config("preset = \"standard\"\n").unwrap();
        let s = &cfg.scenario;
        assert_eq!(s.a, UnitAxis::X);
        assert_eq!(s.b, UnitAxis::Y);
        assert!(s.psi.same_ray(&SpinState::plus_z(), 1e-15));
        assert_eq!(s.path, Path::equator());
        assert_eq!(s.samples, DEFAULT_SAMPLES);
        assert_eq!(s.family, Family::Standard);
        assert_eq!(cfg.preset, Some(Preset::Standard));
    }

    #[test]
    fn latitude_path_matches_preset() {
        let text = r#"
[observables]
a = "x"
b = "y"

[state]
axis = "z"

[path]
kind = "latitude"
theta = "pi/3 rad"
"#;
        let cfg = parse_config(text).unwrap();
        let preset = Preset::Latitude.config();
        let (Path::Latitude { theta, phi_start, phi_end }, Path::Latitude { theta: want, .. }) =
            (&cfg.scenario.path, &preset.path)
        else {
            panic!("latitude paths expected")
        };
        assert_abs_diff_eq!(*theta, *want, epsilon = 1e-15);
        assert_eq!((*phi_start, *phi_end), (0.0, TAU));
        assert_eq!(cfg.scenario.family, preset.family);
        assert_eq!(cfg.scenario.samples, preset.samples);
    }

    #[test]
    fn omitted_apparatus_uses_recorded_defaults() {
        let cfg = parse_config("preset = \"latitude\"\n").unwrap();
        assert_eq!(cfg.imperfections, ImperfectionModel::default());
        assert_eq!(cfg.imperfections.efficiency, 0.96);
        assert_abs_diff_eq!(cfg.imperfections.angle_jitter_sigma, 1.5f64.to_radians());
        for key in ["apparatus.efficiency", "apparatus.jitter", "apparatus.mode"] {
            assert!(cfg.defaults_applied.iter().any(|d| d.starts_with(key)), "{key}");
        }
    }

    #[test]
    fn monte_carlo_section() {
        let text = r#"
preset = "standard"
[apparatus]
mode = "monte_carlo"
efficiency = 0.9
jitter = "2 deg"
exposure = 10.0
mean_rate = 50.0
replicates = 20
seed = 9
"#;
        let cfg = parse_config(text).unwrap();
        let Mode::MonteCarlo(s) = cfg.scenario.mode else { panic!("mode") };
        assert_eq!(s.replicates, 20);
        assert_eq!(s.counting, Counting::Poisson { exposure: 10.0, mean_rate: 50.0 });
        assert_eq!(s.imperfections.efficiency, 0.9);
        assert_abs_diff_eq!(s.imperfections.angle_jitter_sigma, 2f64.to_radians());
        assert_eq!(cfg.scenario.seed, 9);
        assert_eq!(s.imperfections.rng_seed, 9);
    }

    #[test]
    fn axis_forms() {
        let text = r#"
[observables]
a = [2, 0, 0]
b = { theta = "90 deg", phi = "60 deg" }
[state]
axis = "-z"
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.scenario.a, UnitAxis::X);
        assert_abs_diff_eq!(cfg.scenario.b.y(), FRAC_PI_3.sin(), epsilon = 1e-15);
        assert!(cfg.scenario.psi.same_ray(&SpinState::minus_z(), 1e-15));
        match cfg.scenario.family {
            Family::PhiB { phi_b } => assert_abs_diff_eq!(phi_b, FRAC_PI_3, epsilon = 1e-12),
            f => panic!("family {f:?}"),
        }
    }

    #[test]
    fn custom_path() {
        let text = r#"
preset = "standard"
[path]
axes = ["x", [0, 1, 0], { theta = "0 deg", phi = "0 deg" }]
"#;
        let cfg = parse_config(text).unwrap();
        let Path::Custom { axes } = &cfg.scenario.path else { panic!("path") };
        assert_eq!(axes.len(), 3);
        assert_eq!(cfg.scenario.samples, 3);
    }

    #[test]
    fn unknown_key_is_line_anchored() {
        assert_eq!(config_line("preset = \"standard\"\n\n[path]\nkind = \"equator\"\nbogus = 1\n"), 5);
        assert_eq!(config_line("preset = \"standard\"\ncolour = 3\n"), 2);
    }

    #[test]
    fn missing_axes() {
        let text = "[observables]\na = \"x\"\n[state]\naxis = \"z\"\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("observables.b"), "{err}");
        assert_eq!(config_line(text), 1);
        assert!(parse_config("[observables]\na = \"x\"\nb = \"y\"\n")
            .unwrap_err()
            .to_string()
            .contains("state.axis"));
    }

    #[test]
    fn zero_axis_rejected() {
        let text = "preset = \"standard\"\n[observables]\nb = [0, 0, 0]\n";
        assert_eq!(config_line(text), 3);
        assert_eq!(config_line("preset = \"standard\"\n[state]\naxis = \"w\"\n"), 3);
    }

    #[test]
    fn conflicting_path_specs() {
        let both = "preset = \"standard\"\n[path]\ntheta = \"60 deg\"\naxes = [\"x\"]\n";
        assert_eq!(config_line(both), 4);
        let equator = "preset = \"standard\"\n[path]\nkind = \"equator\"\ntheta = \"60 deg\"\n";
        assert_eq!(config_line(equator), 4);
        let custom = "preset = \"standard\"\n[path]\naxes = [\"x\"]\nsamples = 5\n";
        assert_eq!(config_line(custom), 4);
        let counts = "preset = \"standard\"\n[apparatus]\ncounts_per_setting = 10\nexposure = 1.0\nmean_rate = 3.0\n";
        assert_eq!(config_line(counts), 3);
    }

    #[test]
    fn unitless_angle_rejected() {
        let text = "preset = \"standard\"\n[path]\nkind = \"latitude\"\ntheta = 1.0\n";
        assert_eq!(config_line(text), 4);
        assert!(parse_config(text).unwrap_err().to_string().contains("unit"));
    }

    #[test]
    fn invalid_values_rejected() {
        assert_eq!(config_line("preset = \"standard\"\n[apparatus]\nefficiency = 1.5\n"), 3);
        assert_eq!(config_line("preset = \"standard\"\n[path]\nsamples = 1\n"), 3);
        assert_eq!(config_line("preset = \"nope\"\n"), 1);
        assert_eq!(config_line("preset = \"standard\"\n[apparatus]\nmode = \"fast\"\n"), 3);
        assert_eq!(config_line("[observables\n"), 1);
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::from_preset(Preset::Standard);
        cfg.set_seed(5);
        cfg.set_samples(11).unwrap();
        cfg.set_replicates(7).unwrap();
        assert_eq!(cfg.scenario.samples, 11);
        let Mode::MonteCarlo(s) = cfg.scenario.mode else { panic!("mode") };
        assert_eq!(s.replicates, 7);
        assert_eq!(s.imperfections.rng_seed, 5);
        assert!(cfg.set_replicates(1).is_err());
        assert!(cfg.set_samples(1).is_err());
        assert_eq!(cfg.scenario.samples, 11);
    }

    #[test]
    fn family_inference() {
        assert_eq!(infer_family(&UnitAxis::X, &UnitAxis::Y), Family::Standard);
        assert_eq!(infer_family(&UnitAxis::Y, &UnitAxis::X), Family::General);
        match infer_family(&UnitAxis::X, &UnitAxis::from_angles(FRAC_PI_4, FRAC_PI_2)) {
            Family::ThetaB { theta_b } => assert_abs_diff_eq!(theta_b, FRAC_PI_4, epsilon = 1e-12),
            f => panic!("family {f:?}"),
        }
    }
}
