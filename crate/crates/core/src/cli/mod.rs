//! Command-line front end: `simulate`, `sweep`, `spectra`, `dl-roots` and
//! `heatmap`.

pub mod config;
pub mod io;
pub mod manifest;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::exact::exact_trajectory;
use crate::model::{dl_amplitudes, dl_residual, DriveFamily, Frame, RootScan};
use crate::observables::{self, ObservableSeries};
use crate::propagate::{evolve, Trajectory, Warning};
use crate::spectra::{floquet_spectrum, stark_spectrum, MonodromyOptions, MIN_STEPS_PER_PERIOD};

use config::{ConfigFile, SpectraMode};
use manifest::RunManifest;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: row {row}: {message}")]
    Parse { path: PathBuf, row: u64, message: String },
    #[error("validity breach: {0}")]
    Validity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validity(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NotUnitary { .. } | Error::Numerical(_) => CliError::Validity(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "glauber-dl", version, about = "Driven Glauber-Fock lattices: dynamic localization and self-imaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one configuration and write trajectory and observables.
    Simulate { config: PathBuf },
    /// Scan F0/ω and/or ω/ρ and tabulate revival scalars per point.
    Sweep { config: PathBuf },
    /// Quasienergies of the one-period propagator or the Stark ladder.
    Spectra { config: PathBuf },
    /// Drive amplitudes satisfying the dynamic-localization condition.
    DlRoots {
        #[arg(long, default_value = "sinusoidal")]
        family: DriveFamily,
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Render a trajectory CSV as an SVG heat map with a revival plot.
    Heatmap {
        csv: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a command. Outputs of a run that breached validity are still
/// written; the breach shows up as exit code 2.
pub fn run(command: &Command) -> Result<i32, CliError> {
    match command {
        Command::Simulate { config } => finish(run_simulate(config)?),
        Command::Sweep { config } => finish(run_sweep(config)?),
        Command::Spectra { config } => finish(run_spectra(config)?),
        Command::DlRoots { family, omega, count } => {
            print!("{}", dl_roots_table(*family, *omega, *count)?);
            Ok(0)
        }
        Command::Heatmap { csv, output } => {
            emit_heatmap(csv, output)?;
            Ok(0)
        }
    }
}

fn finish(manifest: RunManifest) -> Result<i32, CliError> {
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for path in &manifest.outputs {
        println!("{}", path.display());
    }
    match &manifest.breach {
        Some(reason) => Err(CliError::Validity(reason.clone())),
        None => Ok(0),
    }
}

fn load(path: &Path) -> Result<(String, ConfigFile), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut parsed = config::parse(&text)?;
    // relative output directories are taken from the config file's location
    if parsed.output.dir.is_relative() {
        if let Some(parent) = path.parent() {
            parsed.output.dir = parent.join(&parsed.output.dir);
        }
    }
    Ok((text, parsed))
}

fn output_path(cfg: &ConfigFile, suffix: &str) -> PathBuf {
    cfg.output.dir.join(format!("{}{}", cfg.output.prefix, suffix))
}

/// Revival scalars at the period multiples covered by a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevivalSummary {
    pub periods: usize,
    /// P_r at the sample nearest T.
    pub revival_t: f64,
    pub min_revival: f64,
    /// Largest self-imaging error over k = 1..periods.
    pub self_imaging_error: f64,
    /// Largest |sample time − kT|.
    pub max_offset: f64,
}

pub fn revival_summary(traj: &Trajectory, frame: Frame) -> Option<RevivalSummary> {
    let period = traj.drive().period()?;
    let t_end = *traj.times.last()?;
    let periods = ((t_end + 0.5 * traj.dt) / period).floor() as usize;
    if periods == 0 {
        return None;
    }
    let pr = observables::revival_probability_in(traj, frame);
    let mut summary = RevivalSummary {
        periods,
        revival_t: f64::NAN,
        min_revival: f64::INFINITY,
        self_imaging_error: 0.0,
        max_offset: 0.0,
    };
    for k in 1..=periods {
        let si = observables::self_imaging_error(traj, k).ok()?;
        let p = pr[si.sample];
        if k == 1 {
            summary.revival_t = p;
        }
        summary.min_revival = summary.min_revival.min(p);
        summary.self_imaging_error = summary.self_imaging_error.max(si.error);
        summary.max_offset = summary.max_offset.max(si.offset.abs());
    }
    Some(summary)
}

fn warning_breach(warnings: &[Warning], allow_leakage: bool) -> Option<String> {
    warnings
        .iter()
        .find(|w| w.is_validity_breach() || (!allow_leakage && matches!(w, Warning::Leakage { .. })))
        .map(|w| w.to_string())
}

pub fn run_simulate(path: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let (text, cfg) = load(path)?;
    let sim = cfg.simulation()?;
    let traj = evolve(&sim)?;
    let mut manifest = RunManifest::new("simulate", &text)?;

    let deviation = if cfg.run.exact {
        let exact = exact_trajectory(&sim, &traj.times)?;
        Some(
            traj.states
                .iter()
                .zip(&exact)
                .map(|(num, ex)| {
                    num.iter()
                        .zip(&ex.amplitudes)
                        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
                })
                .collect::<Vec<f64>>(),
        )
    } else {
        None
    };

    fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
    if cfg.output.trajectory {
        let out = output_path(&cfg, "_trajectory.csv");
        io::write_trajectory(&out, &traj.in_frame(cfg.output.frame.into()))?;
        manifest.outputs.push(out);
    }
    let series = ObservableSeries::from_trajectory(&traj, cfg.run.revival_frame.into());
    if cfg.output.observables {
        let out = output_path(&cfg, "_observables.csv");
        io::write_observables(&out, &series, deviation.as_deref())?;
        manifest.outputs.push(out);
    }

    manifest.warnings.extend(traj.warnings.iter().map(|w| w.to_string()));
    manifest.breach = warning_breach(&traj.warnings, cfg.run.allow_leakage);
    manifest.summary = json!({
        "samples": traj.len(),
        "dt": traj.dt,
        "t_end": sim.t_end,
        "max_norm_drift": traj.max_norm_drift(),
        "final_revival": series.revival.last(),
        "revival": revival_summary(&traj, cfg.run.revival_frame.into()),
        "max_exact_deviation": deviation.map(|d| d.into_iter().fold(0.0, f64::max)),
    });
    manifest.finish(&output_path(&cfg, "_manifest.json"), start)?;
    Ok(manifest)
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub omega_over_rho: f64,
    pub f0_over_omega: f64,
    pub revival: Option<RevivalSummary>,
    /// Converged-level quasienergy spread in units of ω.
    pub quasienergy_spread: Option<f64>,
    /// `ok`, a warning kind, or the error that stopped the point.
    pub status: String,
}

fn sweep_point(cfg: &ConfigFile, family: DriveFamily, w_ratio: f64, f_ratio: f64, spectra: bool) -> SweepPoint {
    let mut point = SweepPoint {
        omega_over_rho: w_ratio,
        f0_over_omega: f_ratio,
        revival: None,
        quasienergy_spread: None,
        status: "ok".into(),
    };
    let result = (|| -> Result<(), CliError> {
        let profile = cfg.profile.build()?;
        let omega = w_ratio * profile.rho.norm();
        let drive = family.build(f_ratio * omega, omega)?.shifted(cfg.drive.time_offset);
        let sim = cfg.simulation_with(profile.clone(), drive.clone())?;
        let traj = evolve(&sim)?;
        point.revival = revival_summary(&traj, cfg.run.revival_frame.into());
        if let Some(w) = traj.warnings.first() {
            point.status = match w {
                Warning::Leakage { .. } => "leakage".into(),
                Warning::NormDrift { .. } => "norm_drift".into(),
            };
        }
        if spectra {
            let options = MonodromyOptions {
                period: None,
                steps_per_period: cfg.run.steps_per_period.unwrap_or(MIN_STEPS_PER_PERIOD),
                integrator: cfg.run.integrator.into(),
            };
            let spectrum = floquet_spectrum(&profile, &drive, options)?;
            point.quasienergy_spread = spectrum.spread(true).map(|s| s / spectrum.omega);
        }
        Ok(())
    })();
    if let Err(e) = result {
        point.status = format!("error: {e}");
    }
    point
}

pub fn run_sweep(path: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let (text, mut cfg) = load(path)?;
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let family = cfg.drive.family()?;
    let rho = cfg.profile.build()?.rho.norm();
    let w_grid = match &sweep.omega_over_rho {
        Some(g) => g.points()?,
        None => vec![cfg
            .drive
            .omega(rho)?
            .map(|w| w / rho)
            .ok_or_else(|| CliError::Config("sweep needs omega_over_rho or a drive frequency".into()))?],
    };
    let f_grid = match &sweep.f0_over_omega {
        Some(g) => g.points()?,
        None => vec![match (cfg.drive.f0_over_omega, cfg.drive.f0) {
            (Some(r), None) => r,
            _ => return Err(CliError::Config("sweep needs f0_over_omega in [sweep] or [drive]".into())),
        }],
    };
    let total = w_grid.len() * f_grid.len();
    if total > 100_000 {
        return Err(CliError::Config(format!("sweep grid has {total} points, limit is 100000")));
    }
    cfg.run.t_end = None;
    cfg.run.periods = Some(sweep.periods as f64);

    let grid: Vec<(f64, f64)> = w_grid
        .iter()
        .flat_map(|w| f_grid.iter().map(move |f| (*w, *f)))
        .collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&(w, f)| sweep_point(&cfg, family, w, f, sweep.quasienergies))
        .collect();

    let mut manifest = RunManifest::new("sweep", &text)?;
    fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
    let out = output_path(&cfg, "_sweep.csv");
    io::write_sweep(&out, &points)?;
    manifest.outputs.push(out);
    let failed = points.iter().filter(|p| p.status != "ok").count();
    for p in points.iter().filter(|p| p.status != "ok") {
        manifest.warnings.push(format!(
            "point omega/rho = {}, F0/omega = {}: {}",
            p.omega_over_rho, p.f0_over_omega, p.status
        ));
    }
    let best = points
        .iter()
        .filter_map(|p| p.revival.map(|r| (p, r.self_imaging_error)))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    manifest.summary = json!({
        "points": points.len(),
        "flagged": failed,
        "best": best.map(|(p, e)| json!({
            "omega_over_rho": p.omega_over_rho,
            "f0_over_omega": p.f0_over_omega,
            "self_imaging_error": e,
        })),
    });
    manifest.finish(&output_path(&cfg, "_manifest.json"), start)?;
    Ok(manifest)
}

pub fn run_spectra(path: &Path) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let (text, cfg) = load(path)?;
    let section = cfg
        .spectra
        .clone()
        .ok_or_else(|| CliError::Config("spectra needs a [spectra] section".into()))?;
    let profile = cfg.profile.build()?;
    let drive = cfg.drive.build(profile.rho.norm())?;
    let mut manifest = RunManifest::new("spectra", &text)?;
    fs::create_dir_all(&cfg.output.dir).map_err(|e| CliError::io(&cfg.output.dir, e))?;
    let out = output_path(&cfg, "_spectrum.csv");

    match section.mode {
        SpectraMode::Monodromy => {
            let options = MonodromyOptions {
                period: None,
                steps_per_period: section.steps_per_period.unwrap_or(MIN_STEPS_PER_PERIOD),
                integrator: cfg.run.integrator.into(),
            };
            let spectrum = floquet_spectrum(&profile, &drive, options)?;
            io::write_quasienergies(&out, &spectrum)?;
            let leaky = spectrum.warnings.len();
            if leaky > 0 {
                manifest
                    .warnings
                    .push(format!("{leaky} monodromy columns reached the lattice boundary"));
            }
            manifest.summary = json!({
                "mode": "monodromy",
                "levels": spectrum.values.len(),
                "converged": spectrum.converged_count(),
                "omega": spectrum.omega,
                "spread_converged_over_omega": spectrum.spread(true).map(|s| s / spectrum.omega),
                "spread_all_over_omega": spectrum.spread(false).map(|s| s / spectrum.omega),
            });
        }
        SpectraMode::Stark => {
            let f0 = match (section.f0, cfg.drive.kind) {
                (Some(f), _) => f,
                (None, config::DriveName::Dc) => drive.force(0.0),
                _ => return Err(CliError::Config("spectra.f0 is required unless the drive is dc".into())),
            };
            let spectrum = stark_spectrum(&profile, f0)?;
            io::write_stark(&out, &spectrum)?;
            let tol = 1e-6 * f0;
            manifest.summary = json!({
                "mode": "stark",
                "f0": f0,
                "levels": spectrum.values.len(),
                "converged": spectrum.converged.iter().filter(|c| **c).count(),
                "longest_uniform_run": spectrum.longest_uniform_run(f0, tol),
            });
        }
    }
    manifest.outputs.push(out);
    manifest.finish(&output_path(&cfg, "_manifest.json"), start)?;
    Ok(manifest)
}

/// `k,f0,f0_over_omega,residual` for the first `count` DL amplitudes.
pub fn dl_roots_table(family: DriveFamily, omega: f64, count: usize) -> Result<String, CliError> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(CliError::Config(format!("--omega must be positive, got {omega}")));
    }
    let scan = RootScan {
        max_ratio: RootScan::default().max_ratio.max(4.0 * count as f64 + 4.0),
        ..RootScan::default()
    };
    let roots = dl_amplitudes(family, omega, scan)?;
    if roots.len() < count {
        return Err(CliError::Config(format!(
            "found only {} roots below F0/omega = {}",
            roots.len(),
            scan.max_ratio
        )));
    }
    let mut table = String::from("k,f0,f0_over_omega,residual\n");
    for (k, f0) in roots.iter().take(count).enumerate() {
        let residual = dl_residual(&family.build(*f0, omega)?)?.norm();
        table.push_str(&format!(
            "{},{:.16e},{:.16e},{:.3e}\n",
            k + 1,
            f0,
            f0 / omega,
            residual
        ));
    }
    Ok(table)
}

pub fn emit_heatmap(csv: &Path, output: &Path) -> Result<(), CliError> {
    let data = io::read_trajectory(csv)?;
    let image = svg::render(&data);
    fs::write(output, image).map_err(|e| CliError::io(output, e))
}

