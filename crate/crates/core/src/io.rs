//! CSV and manifest output.
//!
//! Every CSV starts with a `# config_hash=<sha256>` comment line, followed by
//! a header row and one record per point. Numbers are written with 17
//! significant digits so files round-trip exactly; a missing value is an
//! empty field. Files are written to a temporary sibling and renamed into
//! place, so a failed run leaves no partial output.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::{NoiseReport, ScanResult, SweepResult};

pub const HASH_PREFIX: &str = "# config_hash=";

/// Full-precision float formatting used in every CSV.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV text with the hash comment line.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self, config_hash: &str) -> Result<Vec<u8>> {
        let mut out = format!("{HASH_PREFIX}{config_hash}\n").into_bytes();
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut out);
            w.write_record(&self.header)?;
            for row in &self.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(out)
    }
}

pub fn spectrum_table(scan: &ScanResult) -> CsvTable {
    let s = &scan.spectrum;
    let mut t = CsvTable::new(&["detuning_hz", "phase_rad", "transmission", "ci_halfwidth_rad", "ratio"]);
    for i in 0..s.len() {
        t.push(vec![
            fmt_f64(s.detunings[i] / TAU),
            fmt_f64(s.phase[i]),
            fmt_f64(s.transmission[i]),
            fmt_opt(scan.ci_halfwidth[i]),
            fmt_opt(s.ratio[i]),
        ]);
    }
    t
}

/// Several sweeps stacked, labelled by operating point and the fixed power.
pub fn sweep_table(sweeps: &[(f64, SweepResult)]) -> Result<CsvTable> {
    let first = sweeps
        .first()
        .ok_or_else(|| Error::Format("no sweeps to write".into()))?;
    let axis = first.1.axis;
    if sweeps.iter().any(|(_, s)| s.axis != axis) {
        return Err(Error::Format("sweeps along different axes".into()));
    }
    let fixed = match axis {
        crate::harness::SweepAxis::SignalPower => "p_met_w",
        crate::harness::SweepAxis::MeterPower => "p_sig_w",
    };
    let mut t = CsvTable::new(&[
        "operating_point",
        fixed,
        axis.column(),
        "phase_rad",
        "transmission",
        "ci_halfwidth_rad",
    ]);
    for (fixed_power, s) in sweeps {
        for i in 0..s.axis_values.len() {
            t.push(vec![
                s.operating_point.label().to_string(),
                fmt_f64(*fixed_power),
                fmt_f64(s.axis_values[i]),
                fmt_f64(s.phase[i]),
                fmt_f64(1.0 - s.absorption[i]),
                fmt_opt(s.ci_halfwidths[i]),
            ]);
        }
    }
    Ok(t)
}

pub fn noise_table(report: &NoiseReport) -> CsvTable {
    let mut t = CsvTable::new(&[
        "p_met_w",
        "mc_std_rad",
        "predicted_std_rad",
        "predicted_psd_rad_per_rthz",
        "apparatus_floor_rad_per_rthz",
    ]);
    for r in &report.rows {
        t.push(vec![
            fmt_f64(r.p_met),
            fmt_f64(r.mc_std),
            fmt_f64(r.predicted_std),
            fmt_f64(r.predicted_psd),
            fmt_f64(r.floor_psd),
        ]);
    }
    t
}

/// Columns of a spectrum CSV as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCsv {
    pub config_hash: Option<String>,
    /// Detunings, rad/s.
    pub detunings: Vec<f64>,
    pub phase: Vec<f64>,
    pub transmission: Vec<f64>,
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumCsv> {
    let text = std::fs::read_to_string(path)?;
    let config_hash = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .map(str::to_string);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("{} has no `{name}` column", path.display())))
    };
    let (i_d, i_p, i_t) = (col("detuning_hz")?, col("phase_rad")?, col("transmission")?);
    let mut out = SpectrumCsv {
        config_hash,
        detunings: Vec::new(),
        phase: Vec::new(),
        transmission: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))
        };
        out.detunings.push(TAU * num(i_d)?);
        out.phase.push(num(i_p)?);
        out.transmission.push(num(i_t)?);
    }
    if out.detunings.is_empty() {
        return Err(Error::Format(format!("{} has no data rows", path.display())));
    }
    Ok(out)
}

/// Run manifest written next to the CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_id: Option<String>,
    pub outputs: Vec<PathBuf>,
    /// Headline numbers of the run.
    pub summary: serde_json::Map<String, serde_json::Value>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            config_hash: config.hash(),
            seed: config.seed,
            seeds: Vec::new(),
            calibration_id: None,
            outputs: Vec::new(),
            summary: serde_json::Map::new(),
            config: config.clone(),
        }
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(
            key.to_string(),
            serde_json::to_value(value).expect("summary value serialises"),
        );
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Reads the hash comment of a CSV written by this module.
pub fn csv_config_hash(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix(HASH_PREFIX))
        .map(str::to_string)
        .ok_or_else(|| Error::Format(format!("{} has no config hash line", path.display())))
}
