//! `xpmsim` command-line front end.
//!
//! Exit codes: 0 success, 1 pipeline failure, 2 usage error or missing
//! config, 3 malformed config, 4 invalid config value.

use std::f64::consts::{PI, TAU};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, RunConfig};
use crate::error::{Error, Result};
use crate::fitting::{least_squares_fit, FitProblem, Model};
use crate::harness::{run_noise_characterization, DesignReport, Harness, DETUNED_POINT};
use crate::io::{self, fmt_f64, CsvTable, Manifest};
use crate::kerr_engine::{phase_per_atom, phase_per_photon, BeamPowers, KerrEngine};

/// Relative noise used by `--noise on` when the config has none.
const DEFAULT_SWEEP_NOISE: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "xpmsim", version, about = "Cross-phase modulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase and transmission against two-photon detuning.
    Spectrum(Common),
    /// Phase against signal power at each operating point and meter power.
    SweepSignal(Common),
    /// Phase and absorption against meter power, with saturation fits.
    SweepMeter(Common),
    /// Monte Carlo phase noise against meter power.
    Noise(Common),
    /// Fit the manifold dispersion model to a spectrum CSV.
    Fit(FitArgs),
    /// Solve the calibration anchors and write the calibration document.
    Calibrate(Common),
    /// Phase per photon for the improved design.
    Extrapolate(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Detection noise in scans and multiplicative noise in sweeps.
    #[arg(long, value_enum)]
    noise: Option<Toggle>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Spectrum CSV written by `xpmsim spectrum`.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    let pool = match thread_pool() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(lines) => {
            for l in lines {
                let _ = writeln!(stdout, "{l}");
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Pool sized by `XPMSIM_THREADS`, or rayon's default when unset.
fn thread_pool() -> std::result::Result<rayon::ThreadPool, String> {
    let n = match std::env::var("XPMSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("XPMSIM_THREADS must be a positive integer, got `{v}`"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| e.to_string())
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    match common.noise {
        Some(Toggle::On) => {
            cfg.scan.detection_noise = true;
            for r in [
                &mut cfg.signal_sweep.relative_noise,
                &mut cfg.meter_sweep.relative_noise,
            ] {
                if *r == 0.0 {
                    *r = DEFAULT_SWEEP_NOISE;
                }
            }
        }
        Some(Toggle::Off) => {
            cfg.scan.detection_noise = false;
            cfg.signal_sweep.relative_noise = 0.0;
            cfg.meter_sweep.relative_noise = 0.0;
        }
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Files of one run, written only once every pipeline step has succeeded.
struct Output {
    dir: PathBuf,
    files: Vec<(PathBuf, Vec<u8>)>,
    manifest: Manifest,
}

impl Output {
    fn new(subcommand: &str, cfg: &RunConfig) -> Self {
        Self {
            dir: cfg.output_dir.clone(),
            files: Vec::new(),
            manifest: Manifest::new(subcommand, cfg),
        }
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<PathBuf> {
        let bytes = table.to_bytes(&self.manifest.config_hash)?;
        Ok(self.add(name, bytes))
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) -> PathBuf {
        let path = self.dir.join(name);
        self.manifest.outputs.push(PathBuf::from(name));
        self.files.push((path.clone(), bytes));
        path
    }

    fn commit(self) -> Result<PathBuf> {
        for (path, bytes) in &self.files {
            io::write_atomic(path, bytes)?;
        }
        let name = format!("{}.manifest.json", self.manifest.subcommand.replace('-', "_"));
        let path = self.dir.join(name);
        io::write_atomic(&path, self.manifest.to_json()?.as_bytes())?;
        Ok(path)
    }
}

/// Phase and absorption at the detuned point relative to their maxima.
struct OffResonance {
    phase_ratio: f64,
    absorption_suppression: f64,
}

impl OffResonance {
    fn at(engine: &KerrEngine, powers: BeamPowers) -> Result<Self> {
        let phase_max = engine.meter_phase_shift(powers, engine.max_phase_detuning())?;
        let phase = engine.meter_phase_shift(powers, DETUNED_POINT)?;
        let peak = engine.shape().absorption_peak().detuning;
        let absorption_max = 1.0 - engine.transmission(powers, peak)?;
        let absorption = 1.0 - engine.transmission(powers, DETUNED_POINT)?;
        Ok(Self {
            phase_ratio: phase / phase_max,
            absorption_suppression: absorption_max / absorption,
        })
    }

    fn note(&self, manifest: &mut Manifest) {
        manifest.note("phase_ratio_minus_35MHz", self.phase_ratio);
        manifest.note("absorption_suppression_minus_35MHz", self.absorption_suppression);
    }

    fn line(&self) -> String {
        format!(
            "at -35 MHz: phase / max phase = {:.4}, absorption suppressed {:.1}x",
            self.phase_ratio, self.absorption_suppression
        )
    }
}

fn dispatch(command: Command) -> Result<Vec<String>> {
    match command {
        Command::Spectrum(c) => spectrum(&load(&c)?),
        Command::SweepSignal(c) => sweep_signal(&load(&c)?),
        Command::SweepMeter(c) => sweep_meter(&load(&c)?),
        Command::Noise(c) => noise(&load(&c)?),
        Command::Fit(f) => fit(&load(&f.common)?, &f.input),
        Command::Calibrate(c) => calibrate(&load(&c)?),
        Command::Extrapolate(c) => extrapolate(&load(&c)?),
    }
}

fn spectrum(cfg: &RunConfig) -> Result<Vec<String>> {
    let h = cfg.harness()?;
    let scan = cfg.scan_config();
    let result = h.run_spectrum_scan(&scan)?;
    let powers = scan.powers;
    let peak_detuning = h.engine.max_phase_detuning();
    let peak_phase = h.engine.meter_phase_shift(powers, peak_detuning)?;
    let off = OffResonance::at(&h.engine, powers)?;

    let mut out = Output::new("spectrum", cfg);
    let path = out.csv("spectrum.csv", &io::spectrum_table(&result))?;
    out.manifest.seeds = scan.seeds.clone();
    out.manifest.calibration_id = Some(h.engine.calibration().id());
    out.manifest.note("points", result.spectrum.len());
    out.manifest.note("phase_extremum_rad", peak_phase);
    out.manifest.note("phase_extremum_detuning_hz", peak_detuning / TAU);
    off.note(&mut out.manifest);
    let manifest = out.commit()?;
    Ok(vec![
        format!(
            "spectrum: {} points, phase extremum {:.6} rad at {:.3} MHz",
            result.spectrum.len(),
            peak_phase,
            peak_detuning / TAU / 1e6,
        ),
        off.line(),
        format!("wrote {} and {}", path.display(), manifest.display()),
    ])
}

fn sweep_signal(cfg: &RunConfig) -> Result<Vec<String>> {
    let h = cfg.harness()?;
    let configs = cfg.signal_sweeps();
    let mut results = Vec::with_capacity(configs.len());
    let mut lines = Vec::new();
    let mut slopes = Vec::new();
    for c in &configs {
        let r = h.run_signal_sweep(c)?;
        let slope = r.loglog.map(|l| l.slope);
        lines.push(format!(
            "sweep-signal: {} at P_met = {:.3e} W, log-log slope {}",
            c.operating_point.label(),
            c.fixed_power,
            slope.map_or_else(|| "n/a".to_string(), |s| format!("{s:.6}")),
        ));
        slopes.push(serde_json::json!({
            "operating_point": c.operating_point,
            "p_met_w": c.fixed_power,
            "loglog_slope": slope,
        }));
        results.push((c.fixed_power, r));
    }
    let mut out = Output::new("sweep-signal", cfg);
    let path = out.csv("sweep_signal.csv", &io::sweep_table(&results)?)?;
    out.manifest.seeds = configs[0].seeds.clone();
    out.manifest.calibration_id = Some(h.engine.calibration().id());
    out.manifest.note("sweeps", slopes);
    let manifest = out.commit()?;
    lines.push(format!("wrote {} and {}", path.display(), manifest.display()));
    Ok(lines)
}

fn sweep_meter(cfg: &RunConfig) -> Result<Vec<String>> {
    let h = cfg.harness()?;
    let configs = cfg.meter_sweeps();
    let mut results = Vec::with_capacity(configs.len());
    let mut lines = Vec::new();
    let mut fits = Vec::new();
    for c in &configs {
        let r = h.run_meter_sweep(c)?;
        if let Some(s) = &r.saturation {
            lines.push(format!(
                "sweep-meter: {} P_sat phase {:.4e} W, absorption {:.4e} W (median of {} seeds)",
                c.operating_point.label(),
                s.phase_p_sat,
                s.absorption_p_sat,
                c.seeds.len(),
            ));
            fits.push(serde_json::json!({
                "operating_point": c.operating_point,
                "phase_p_sat_w": s.phase_p_sat,
                "absorption_p_sat_w": s.absorption_p_sat,
            }));
        }
        results.push((c.fixed_power, r));
    }
    let mut out = Output::new("sweep-meter", cfg);
    let path = out.csv("sweep_meter.csv", &io::sweep_table(&results)?)?;
    out.manifest.seeds = configs[0].seeds.clone();
    out.manifest.calibration_id = Some(h.engine.calibration().id());
    out.manifest.note("saturation", fits);
    let manifest = out.commit()?;
    lines.push(format!("wrote {} and {}", path.display(), manifest.display()));
    Ok(lines)
}

fn noise(cfg: &RunConfig) -> Result<Vec<String>> {
    let ncfg = cfg.noise_config();
    let report = run_noise_characterization(&ncfg, &cfg.detection_settings())?;
    let mut out = Output::new("noise", cfg);
    let path = out.csv("noise.csv", &io::noise_table(&report))?;
    out.manifest.seeds = vec![ncfg.seed];
    out.manifest.note("noise_bandwidth_hz", report.noise_bandwidth);
    out.manifest.note("scaling_exponent", report.scaling.slope);
    out.manifest.note("scaling_exponent_ci95", report.scaling.slope_ci);
    let manifest = out.commit()?;
    Ok(vec![
        format!(
            "noise: phase std scales as P_met^{:.4} (±{:.4}), {} trials per power",
            report.scaling.slope, report.scaling.slope_ci, ncfg.trials_per_power
        ),
        format!("wrote {} and {}", path.display(), manifest.display()),
    ])
}

fn fit(cfg: &RunConfig, input: &Path) -> Result<Vec<String>> {
    let data = io::read_spectrum_csv(input)?;
    let engine = cfg.engine()?;
    let shape = engine.shape();
    let model = Model::DispersionManifold(shape);
    let problem = FitProblem::with_initial_guess(data.detunings, data.phase, None, &model)?;
    let result = least_squares_fit(&problem, Some(shape))?;
    if !result.converged {
        return Err(Error::Format(format!(
            "fit did not converge: {}",
            result.diagnostic.as_deref().unwrap_or("no diagnostic")
        )));
    }
    let errors = result.std_errors();
    let mut table = CsvTable::new(&["parameter", "value", "std_error"]);
    for (i, name) in result.model.param_names().iter().enumerate() {
        table.push(vec![
            name.to_string(),
            fmt_f64(result.params[i]),
            errors.as_ref().map(|e| fmt_f64(e[i])).unwrap_or_default(),
        ]);
    }
    let phase_max = result.derived_phase_max.unwrap_or(result.params[0]);

    let mut out = Output::new("fit", cfg);
    let path = out.csv("fit.csv", &table)?;
    out.add("fit.json", result.to_json()?.into_bytes());
    out.manifest.calibration_id = Some(engine.calibration().id());
    out.manifest.note("input", input);
    out.manifest.note("input_config_hash", &data.config_hash);
    out.manifest.note("phase_extremum_rad", phase_max);
    out.manifest.note("residual_rms_rad", result.residual_rms);
    let manifest = out.commit()?;
    Ok(vec![
        format!(
            "fit: phase extremum {:.9} rad, centre {:.6} MHz, residual rms {:.3e} rad",
            phase_max,
            result.params[1] / TAU / 1e6,
            result.residual_rms
        ),
        format!("wrote {} and {}", path.display(), manifest.display()),
    ])
}

fn calibrate(cfg: &RunConfig) -> Result<Vec<String>> {
    let h: Harness = cfg.harness()?;
    let engine = &h.engine;
    let cal = engine.calibration();
    let anchor = cfg.calibration_anchors().phase;
    let phi_ph = phase_per_photon(anchor.phase, anchor.p_sig, engine.consts())?;
    let phi_atom = phase_per_atom(anchor.phase, engine.cell())?;
    let check = engine.meter_phase_shift(
        BeamPowers::new(anchor.p_met, anchor.p_sig)?,
        engine.max_phase_detuning(),
    )?;

    let mut table = CsvTable::new(&[
        "coupling_c_m2_per_w",
        "peak_od",
        "p_sat_phase_w",
        "p_sat_abs_w",
        "n2_m2_per_w",
        "phase_per_photon_rad",
        "phase_per_atom_rad",
    ]);
    table.push(vec![
        fmt_f64(cal.coupling_c),
        fmt_f64(cal.peak_od),
        fmt_f64(cal.p_sat_phase),
        fmt_f64(cal.p_sat_abs),
        fmt_f64(engine.n2()),
        fmt_f64(phi_ph),
        fmt_f64(phi_atom),
    ]);
    let mut out = Output::new("calibrate", cfg);
    let path = out.csv("calibration.csv", &table)?;
    out.add("calibration.json", cal.to_json()?.into_bytes());
    out.manifest.calibration_id = Some(cal.id());
    out.manifest.note("anchor_phase_check_rad", check);
    let off = OffResonance::at(engine, BeamPowers::new(anchor.p_met, anchor.p_sig)?)?;
    off.note(&mut out.manifest);
    let manifest = out.commit()?;
    Ok(vec![
        format!(
            "calibrate: id {}, C = {:.4e} m^2/W, peak OD {:.4}, anchor phase {:.6} rad ({:.4} pi)",
            cal.id(),
            cal.coupling_c,
            cal.peak_od,
            check,
            check / PI
        ),
        off.line(),
        format!("wrote {} and {}", path.display(), manifest.display()),
    ])
}

fn extrapolate(cfg: &RunConfig) -> Result<Vec<String>> {
    let report = DesignReport::new(&cfg.design_params(), cfg.detection.quantum_efficiency)?;
    let mut table = CsvTable::new(&["phase_per_photon_rad", "noise_floor_factor"]);
    table.push(vec![fmt_f64(report.phi_per_photon), fmt_f64(report.noise_floor_factor)]);
    let mut out = Output::new("extrapolate", cfg);
    let path = out.csv("extrapolation.csv", &table)?;
    out.manifest.note("phase_per_photon_rad", report.phi_per_photon);
    out.manifest.note("noise_floor_factor", report.noise_floor_factor);
    let manifest = out.commit()?;
    Ok(vec![
        format!(
            "extrapolate: {:.3} rad/photon, shot-noise floor x{:.3}",
            report.phi_per_photon, report.noise_floor_factor
        ),
        format!("wrote {} and {}", path.display(), manifest.display()),
    ])
}
