use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn edrsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edrsim")).args(args).current_dir(cwd).output().expect("spawn edrsim")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn same_seed_gives_byte_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mc.toml");
    fs::write(
        &config,
        "preset = \"standard\"\n[path]\nsamples = 5\n[apparatus]\nmode = \"monte_carlo\"\nreplicates = 10\n",
    )
    .unwrap();
    let cfg = config.to_str().unwrap();
    for out in ["a", "b", "c"] {
        let seed = if out == "c" { "8" } else { "7" };
        let o = edrsim(&["simulate", "--config", cfg, "--seed", seed, "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("standard.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn sweep_to_stdout_has_eta_zero_at_quarter_turn() {
    let dir = tempfile::tempdir().unwrap();
    let o = edrsim(&["sweep", "--preset", "standard", "--samples", "5"], dir.path());
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(2).unwrap().split(',').take(4).map(|x| x.parse().unwrap()).collect();
    assert!((row[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    assert_eq!(row[3], 0.0);
}

#[test]
fn manifest_records_defaults_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("lat.toml");
    fs::write(&config, "preset = \"latitude\"\n[output]\nformat = \"json\"\n").unwrap();
    let o = edrsim(
        &["sweep", "--config", config.to_str().unwrap(), "--seed", "11", "--out", "out"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("out/latitude.manifest.json"));
    assert_eq!(m["master_seed"], 11);
    assert_eq!(m["command"], "sweep");
    let defaults: Vec<String> =
        m["defaults_applied"].as_array().unwrap().iter().map(|d| d.as_str().unwrap().to_string()).collect();
    assert!(defaults.iter().any(|d| d == "apparatus.efficiency = 0.96"));
    assert!(defaults.iter().any(|d| d == "apparatus.jitter = 1.5 deg"));
    assert!(m["config_text"].as_str().unwrap().contains("latitude"));
    let rows = json(&dir.path().join("out/latitude.json"));
    assert_eq!(rows.as_array().unwrap().len(), 361);
    assert!(!dir.path().join("out/latitude.json.tmp").exists());
}

#[test]
fn bloch_scan_records_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let o = edrsim(
        &["bloch-scan", "--preset", "standard", "--quantity", "ozawa_sum", "--n-theta", "7", "--n-phi", "9", "--out", "."],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&dir.path().join("standard-ozawa_sum.manifest.json"));
    assert_eq!(m["grid_resolution"], serde_json::json!([7, 9]));
    let text = fs::read_to_string(dir.path().join("standard-ozawa_sum.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 63);
    let min = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min >= 1.0 - 1e-9);
}

#[test]
fn verify_passes_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = edrsim(
        &["verify", "--random-configs", "200", "--indirect-models", "20", "--n-theta", "19", "--n-phi", "37", "--format", "json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["passed"], true);
    assert!(String::from_utf8_lossy(&o.stderr).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "preset = \"standard\"\n[path]\nkind = \"equator\"\nspeed = 3\n").unwrap();
    let o = edrsim(&["sweep", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));

    let o = edrsim(&["sweep", "--preset", "nonsense"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = edrsim(&["sweep", "--samples", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = edrsim(&["sweep", "--config", "missing.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = edrsim(&["--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
}
