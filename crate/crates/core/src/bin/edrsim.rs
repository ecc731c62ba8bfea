use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edrsim::config::{parse_config, RunConfig};
use edrsim::output::{self, Format, RunManifest};
use edrsim::sweep::{self, Mode, Preset, Quantity};
use edrsim::verify::{self, Measure, VerifyOptions};
use edrsim::{Error, Result};

const EXIT_VALIDATION: u8 = 1;
const EXIT_PROPERTY: u8 = 2;

/// Error-disturbance uncertainty relations for spin-1/2 measurements.
#[derive(Parser)]
#[command(name = "edrsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the property suites; exits 2 if any fails.
    Verify(VerifyArgs),
    /// Evaluate a scenario along its o_a path.
    Sweep(ScenarioArgs),
    /// Tabulate one quantity over the Bloch sphere of o_a.
    BlochScan(ScanArgs),
    /// Simulated counting experiment with error bars along the path.
    Simulate(ScenarioArgs),
}

#[derive(Args)]
struct Common {
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// csv or json.
    #[arg(long)]
    format: Option<Format>,
    /// Output directory; results go to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Source {
    /// Scenario file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// standard, latitude, latitude-40, latitude-60, phiB, thetaB,
    /// thetaB-lat, thetaB-matched or psi.
    #[arg(long)]
    preset: Option<Preset>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
    /// Points along the path.
    #[arg(long)]
    samples: Option<usize>,
    /// Monte Carlo replicates per point.
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    common: Common,
    /// error, disturbance, product or ozawa_sum.
    #[arg(long, default_value = "product")]
    quantity: Quantity,
    /// Polar grid points over [0, π].
    #[arg(long, default_value_t = 91)]
    n_theta: usize,
    /// Azimuthal grid points over [0, 2π]; overrides --samples.
    #[arg(long)]
    n_phi: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Random configurations per suite.
    #[arg(long, default_value_t = 10_000)]
    random_configs: usize,
    /// Random indirect measurement models.
    #[arg(long, default_value_t = 1000)]
    indirect_models: usize,
    /// Polar grid points.
    #[arg(long, default_value_t = 181)]
    n_theta: usize,
    /// Azimuthal grid points.
    #[arg(long, default_value_t = 361)]
    n_phi: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Sweep(args) => run_sweep(args, false).map(|_| true),
        Command::Simulate(args) => run_sweep(args, true).map(|_| true),
        Command::BlochScan(args) => run_scan(args).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_PROPERTY),
        Err(e) => {
            eprintln!("edrsim: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn load(source: &Source) -> Result<(RunConfig, Option<String>)> {
    match (&source.config, source.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)?;
            let cfg = parse_config(&text)?;
            Ok((cfg, Some(text)))
        }
        (None, Some(p)) => Ok((RunConfig::from_preset(p), None)),
        (None, None) => Ok((RunConfig::from_preset(Preset::Standard), None)),
    }
}

/// Output directory and format after flags override the file.
fn destination(cfg: &RunConfig, common: &Common) -> (Option<PathBuf>, Format) {
    let dir = common.out.clone().or_else(|| cfg.output.directory.clone());
    (dir, common.format.unwrap_or(cfg.output.format))
}

fn run_sweep(args: ScenarioArgs, simulate: bool) -> Result<()> {
    let (mut cfg, text) = load(&args.source)?;
    if let Some(seed) = args.common.seed {
        cfg.set_seed(seed);
    }
    if let Some(n) = args.samples {
        cfg.set_samples(n)?;
    }
    match (args.replicates, simulate, &cfg.scenario.mode) {
        (Some(r), _, _) => cfg.set_replicates(r)?,
        (None, true, Mode::MonteCarlo(_)) => {}
        (None, true, _) => cfg.set_replicates(edrsim::config::DEFAULT_REPLICATES)?,
        (None, false, _) => {}
    }
    let rows = sweep::run_scenario(&cfg.scenario)?;
    let (dir, format) = destination(&cfg, &args.common);
    let command = if simulate { "simulate" } else { "sweep" };
    match dir {
        None => output::write_rows(&rows, format, io::stdout().lock()),
        Some(dir) => {
            let data = file_in(&dir, &cfg.output.stem, format.extension())?;
            output::emit_rows(&rows, format, &data)?;
            let mut m = manifest(command, &cfg, text)?;
            m.outputs.push(data);
            finish(&dir, &cfg.output.stem, m)
        }
    }
}

fn run_scan(args: ScanArgs) -> Result<()> {
    let (mut cfg, text) = load(&args.source)?;
    if let Some(seed) = args.common.seed {
        cfg.set_seed(seed);
    }
    let n_phi = args.n_phi.or(args.samples).unwrap_or(181);
    let s = &cfg.scenario;
    let grid = sweep::bloch_scan(args.quantity, &s.a, &s.b, &s.psi, args.n_theta, n_phi)?;
    let (dir, format) = destination(&cfg, &args.common);
    match dir {
        None => output::write_grid(&grid, format, io::stdout().lock()),
        Some(dir) => {
            let stem = format!("{}-{}", cfg.output.stem, args.quantity.name());
            let data = file_in(&dir, &stem, format.extension())?;
            output::emit_grid(&grid, format, &data)?;
            let mut m = manifest("bloch-scan", &cfg, text)?;
            m.outputs.push(data);
            m.grid_resolution = Some(grid.resolution());
            finish(&dir, &stem, m)
        }
    }
}

fn run_verify(args: VerifyArgs) -> Result<bool> {
    let opts = VerifyOptions {
        seed: args.common.seed.unwrap_or(0),
        random_configs: args.random_configs,
        theta_samples: args.n_theta,
        phi_samples: args.n_phi,
        indirect_models: args.indirect_models,
        ..VerifyOptions::default()
    };
    if opts.theta_samples < 2 || opts.phi_samples < 2 {
        return Err(Error::InvalidParameter("grid needs at least 2 points per axis".into()));
    }
    let summary = verify::run_all(&opts)?;
    for s in &summary.suites {
        let label = match s.measure {
            Measure::MaxDeviation => "max deviation",
            Measure::MinMargin => "min margin",
        };
        eprintln!(
            "{} {:<22} cases={:<7} {label} {:+.3e} (tolerance {:.0e})",
            if s.passed { "PASS" } else { "FAIL" },
            s.name,
            s.cases,
            s.value,
            s.tolerance
        );
    }
    let format = args.common.format.unwrap_or(Format::Json);
    let mut body = Vec::new();
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut body, &summary)?;
            body.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut body);
            for s in &summary.suites {
                w.serialize(s)?;
            }
            w.flush()?;
        }
    }
    match &args.common.out {
        None => io::stdout().lock().write_all(&body)?,
        Some(dir) => {
            let data = file_in(dir, "verify", format.extension())?;
            output::write_atomic(&data, &body)?;
            let mut m = RunManifest::new("verify", opts.seed, serde_json::to_value(opts)?);
            m.outputs.push(data);
            finish(dir, "verify", m)?;
        }
    }
    Ok(summary.passed)
}

fn file_in(dir: &Path, stem: &str, ext: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(format!("{stem}.{ext}")))
}

fn manifest(command: &str, cfg: &RunConfig, text: Option<String>) -> Result<RunManifest> {
    let mut m = RunManifest::new(command, cfg.scenario.seed, serde_json::to_value(cfg)?);
    m.config_text = text;
    m.defaults_applied = cfg.defaults_applied.clone();
    Ok(m)
}

fn finish(dir: &Path, stem: &str, manifest: RunManifest) -> Result<()> {
    let path = dir.join(format!("{stem}.manifest.json"));
    manifest.write(&path)?;
    for p in &manifest.outputs {
        eprintln!("wrote {}", p.display());
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}
