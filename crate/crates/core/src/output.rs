//! CSV and JSON emission of sweep rows and Bloch grids, plus run manifests.
//!
//! Numbers are written with 17 significant digits so that every value
//! round-trips. Absent values are empty CSV fields and JSON `null`.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::sweep::{BlochGrid, SweepRow};
use crate::{Error, Result};

pub const ROW_COLUMNS: [&str; 18] = [
    "phi_oa_rad",
    "theta_oa_rad",
    "eps_exact",
    "eta_exact",
    "sigma_a",
    "sigma_b",
    "bound",
    "heis_lhs",
    "ozawa_lhs",
    "combined_lhs",
    "eps_est",
    "eps_est_sd",
    "eta_est",
    "eta_est_sd",
    "p_pp",
    "p_pm",
    "p_mp",
    "p_mm",
];

pub const GRID_COLUMNS: [&str; 3] = ["theta_rad", "phi_rad", "value"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?}; expected csv or json"))),
        }
    }
}

/// `x` with 17 significant digits; `None` for non-finite values.
pub fn format_number(x: f64) -> Option<String> {
    x.is_finite().then(|| format!("{x:.16e}"))
}

fn cell(x: Option<f64>) -> String {
    x.and_then(format_number).unwrap_or_default()
}

/// Column values of one sweep row, in `ROW_COLUMNS` order.
pub fn row_values(row: &SweepRow) -> [Option<f64>; 18] {
    let r = &row.exact;
    let est = row.estimate.as_ref();
    let p = &row.ports;
    [
        Some(row.phi),
        Some(row.theta),
        Some(r.eps),
        Some(r.eta),
        Some(r.sigma_a),
        Some(r.sigma_b),
        Some(r.commutator_bound),
        Some(r.heisenberg_lhs),
        Some(r.ozawa_lhs),
        Some(r.combined_lhs),
        est.map(|e| e.eps),
        est.map(|e| e.eps_sd),
        est.map(|e| e.eta),
        est.map(|e| e.eta_sd),
        Some(p.p_pp),
        Some(p.p_pm),
        Some(p.p_mp),
        Some(p.p_mm),
    ]
}

struct Number(Option<f64>);

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.and_then(format_number) {
            Some(text) => RawValue::from_string(text).map_err(serde::ser::Error::custom)?.serialize(s),
            None => s.serialize_none(),
        }
    }
}

struct Record<'a> {
    columns: &'a [&'static str],
    values: &'a [Option<f64>],
}

impl Serialize for Record<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.columns.len()))?;
        for (k, v) in self.columns.iter().zip(self.values) {
            map.serialize_entry(k, &Number(*v))?;
        }
        map.end()
    }
}

fn csv_table<W: Write>(
    w: W,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<Option<f64>>>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns)?;
    for values in rows {
        out.write_record(values.into_iter().map(cell))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes sweep rows in index order.
pub fn write_rows<W: Write>(rows: &[SweepRow], format: Format, mut w: W) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    match format {
        Format::Csv => csv_table(w, &ROW_COLUMNS, rows.iter().map(|r| row_values(r).to_vec())),
        Format::Json => {
            let values: Vec<_> = rows.iter().map(row_values).collect();
            let records: Vec<_> =
                values.iter().map(|v| Record { columns: &ROW_COLUMNS, values: v }).collect();
            serde_json::to_writer_pretty(&mut w, &records)?;
            writeln!(w)?;
            Ok(())
        }
    }
}

/// Writes a Bloch grid in θ-major order.
pub fn write_grid<W: Write>(grid: &BlochGrid, format: Format, mut w: W) -> Result<()> {
    if grid.values.is_empty() {
        return Err(Error::EmptyResults);
    }
    let cells = || {
        grid.thetas
            .iter()
            .flat_map(|&t| grid.phis.iter().map(move |&p| (t, p)))
            .zip(grid.values.iter())
            .map(|((t, p), &v)| vec![Some(t), Some(p), Some(v)])
    };
    match format {
        Format::Csv => csv_table(w, &GRID_COLUMNS, cells()),
        Format::Json => {
            let values: Vec<_> = cells().collect();
            let doc = GridDocument { grid, values: &values };
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
            Ok(())
        }
    }
}

struct GridDocument<'a> {
    grid: &'a BlochGrid,
    values: &'a [Vec<Option<f64>>],
}

impl Serialize for GridDocument<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (n_theta, n_phi) = self.grid.resolution();
        let records: Vec<_> =
            self.values.iter().map(|v| Record { columns: &GRID_COLUMNS, values: v }).collect();
        let mut st = s.serialize_struct("BlochGrid", 4)?;
        st.serialize_field("quantity", self.grid.quantity.name())?;
        st.serialize_field("n_theta", &n_theta)?;
        st.serialize_field("n_phi", &n_phi)?;
        st.serialize_field("cells", &records)?;
        st.end()
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn emit_rows(rows: &[SweepRow], format: Format, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_rows(rows, format, &mut buf)?;
    write_atomic(path, &buf)
}

pub fn emit_grid(grid: &BlochGrid, format: Format, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_grid(grid, format, &mut buf)?;
    write_atomic(path, &buf)
}

/// Everything needed to reproduce a run's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub timestamp: String,
    /// Verbatim scenario file, if one was given.
    pub config_text: Option<String>,
    /// Resolved configuration after presets, defaults and flag overrides.
    pub config: serde_json::Value,
    pub defaults_applied: Vec<String>,
    pub outputs: Vec<PathBuf>,
    /// `(n_θ, n_φ)` of an emitted Bloch grid.
    pub grid_resolution: Option<(usize, usize)>,
}

impl RunManifest {
    pub fn new(command: &str, master_seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            master_seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config_text: None,
            config,
            defaults_applied: Vec::new(),
            outputs: Vec::new(),
            grid_resolution: None,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(self)?;
        text.push(b'\n');
        write_atomic(path, &text)
    }
}
