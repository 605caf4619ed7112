//! TOML run configuration.
//!
//! ```toml
//! [profile]
//! kind = "glauber_fock"     # uniform | glauber_fock | custom
//! rho = 1.0                 # or [re, im]
//! max_site = 60
//! # table = [...]           # custom only, κ_n/|ρ| from n = 1
//!
//! [drive]
//! kind = "sinusoidal"       # none | dc | sinusoidal | square | sampled
//! omega_over_rho = 0.5      # or omega = ...
//! f0_over_omega = 2.4048    # or f0 = ...
//! # samples = [...]         # sampled only, one period of F
//! # time_offset = 0.0
//!
//! [run]
//! initial_site = 0          # or initial_amplitudes = [[re, im], ...]
//! periods = 5               # or t_end = ...
//! steps_per_period = 4000   # or dt = ...
//! # record_stride, frame, integrator, exact, revival_frame, allow_leakage
//!
//! [output]
//! dir = "out"
//! prefix = "dl"
//!
//! [sweep]                   # sweep only
//! f0_over_omega = { start = 0.0, stop = 8.0, count = 161 }
//! omega_over_rho = 0.5      # a value, a list or a range
//!
//! [spectra]                 # spectra only
//! mode = "monodromy"        # or "stark"
//! ```

use std::path::PathBuf;

use num_complex::Complex64;
use serde::Deserialize;

use super::CliError;
use crate::model::{
    DriveFamily, DriveWaveform, Frame, HoppingProfile, InitialState, Integrator, ProfileKind, SimulationConfig,
};

/// Samples recorded over a run when no stride is given.
const DEFAULT_SAMPLES: usize = 400;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub profile: ProfileSection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
    pub sweep: Option<SweepSection>,
    pub spectra: Option<SpectraSection>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProfileName {
    Uniform,
    GlauberFock,
    Custom,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Complex([f64; 2]),
}

impl Scalar {
    fn value(self) -> Complex64 {
        match self {
            Scalar::Real(x) => Complex64::new(x, 0.0),
            Scalar::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub kind: ProfileName,
    #[serde(default = "unit_rho")]
    pub rho: Scalar,
    #[serde(default = "default_max_site")]
    pub max_site: usize,
    pub table: Option<Vec<f64>>,
}

fn unit_rho() -> Scalar {
    Scalar::Real(1.0)
}

fn default_max_site() -> usize {
    60
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum DriveName {
    #[default]
    None,
    Dc,
    Sinusoidal,
    Square,
    Sampled,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default)]
    pub kind: DriveName,
    pub f0: Option<f64>,
    pub f0_over_omega: Option<f64>,
    pub omega: Option<f64>,
    pub omega_over_rho: Option<f64>,
    pub samples: Option<Vec<f64>>,
    #[serde(default)]
    pub time_offset: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub initial_site: Option<usize>,
    pub initial_amplitudes: Option<Vec<[f64; 2]>>,
    pub dt: Option<f64>,
    pub steps_per_period: Option<usize>,
    pub t_end: Option<f64>,
    pub periods: Option<f64>,
    pub record_stride: Option<usize>,
    #[serde(default)]
    pub frame: FrameName,
    #[serde(default)]
    pub integrator: IntegratorName,
    /// Also evaluate the closed-form propagator and a deviation channel.
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub revival_frame: FrameName,
    /// Report boundary leakage without failing the run.
    #[serde(default)]
    pub allow_leakage: bool,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    #[default]
    Lab,
    Gauge,
}

impl From<FrameName> for Frame {
    fn from(f: FrameName) -> Self {
        match f {
            FrameName::Lab => Frame::Lab,
            FrameName::Gauge => Frame::Gauge,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorName {
    Cayley,
    #[default]
    Pade,
}

impl From<IntegratorName> for Integrator {
    fn from(i: IntegratorName) -> Self {
        match i {
            IntegratorName::Cayley => Integrator::Cayley,
            IntegratorName::Pade => Integrator::Pade,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_prefix")]
    pub prefix: String,
    #[serde(default = "yes")]
    pub trajectory: bool,
    #[serde(default = "yes")]
    pub observables: bool,
    /// Frame of the amplitudes written to the trajectory file.
    #[serde(default)]
    pub frame: FrameName,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: default_prefix(),
            trajectory: true,
            observables: true,
            frame: FrameName::Lab,
        }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from(".")
}

fn default_prefix() -> String {
    "run".into()
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Value(f64),
    List(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        match self {
            Grid::Value(x) => Ok(vec![*x]),
            Grid::List(v) if v.is_empty() => Err(CliError::Config("sweep grid list is empty".into())),
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { count: 0, .. } => Err(CliError::Config("sweep range needs count >= 1".into())),
            Grid::Range { start, count: 1, .. } => Ok(vec![*start]),
            Grid::Range { start, stop, count } => Ok((0..*count)
                .map(|i| start + (stop - start) * i as f64 / (*count - 1) as f64)
                .collect()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub f0_over_omega: Option<Grid>,
    pub omega_over_rho: Option<Grid>,
    #[serde(default = "one")]
    pub periods: usize,
    /// Also compute the quasienergy spread at each point (costly).
    #[serde(default)]
    pub quasienergies: bool,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SpectraMode {
    Monodromy,
    Stark,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraSection {
    pub mode: SpectraMode,
    /// Static force for the Stark mode; defaults to the dc drive's F0.
    pub f0: Option<f64>,
    pub steps_per_period: Option<usize>,
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl ProfileSection {
    pub fn build(&self) -> Result<HoppingProfile, CliError> {
        let kind = match (self.kind, &self.table) {
            (ProfileName::Custom, Some(t)) => ProfileKind::Custom(t.clone()),
            (ProfileName::Custom, None) => {
                return Err(CliError::Config("profile.table is required for kind = \"custom\"".into()))
            }
            (_, Some(_)) => return Err(CliError::Config("profile.table is only valid for kind = \"custom\"".into())),
            (ProfileName::Uniform, None) => ProfileKind::Uniform,
            (ProfileName::GlauberFock, None) => ProfileKind::GlauberFock,
        };
        HoppingProfile::new(kind, self.rho.value(), self.max_site).map_err(|e| CliError::Config(format!("profile: {e}")))
    }
}

impl DriveSection {
    /// ω from `omega` or `omega_over_rho`·|ρ|.
    pub fn omega(&self, rho: f64) -> Result<Option<f64>, CliError> {
        match (self.omega, self.omega_over_rho) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "drive: give either omega or omega_over_rho, not both".into(),
            )),
            (Some(w), None) => Ok(Some(w)),
            (None, Some(r)) => Ok(Some(r * rho)),
            (None, None) => Ok(None),
        }
    }

    /// F0 from `f0` or `f0_over_omega`·ω.
    pub fn f0(&self, omega: Option<f64>) -> Result<Option<f64>, CliError> {
        match (self.f0, self.f0_over_omega, omega) {
            (Some(_), Some(_), _) => Err(CliError::Config("drive: give either f0 or f0_over_omega, not both".into())),
            (Some(f), None, _) => Ok(Some(f)),
            (None, Some(r), Some(w)) => Ok(Some(r * w)),
            (None, Some(_), None) => Err(CliError::Config("drive.f0_over_omega needs a frequency".into())),
            (None, None, _) => Ok(None),
        }
    }

    pub fn build(&self, rho: f64) -> Result<DriveWaveform, CliError> {
        let omega = self.omega(rho)?;
        let f0 = self.f0(omega)?;
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("drive.{name} is required for this drive kind")))
        };
        let wrap = |r: crate::Result<DriveWaveform>| r.map_err(|e| CliError::Config(format!("drive: {e}")));
        let drive = match self.kind {
            DriveName::None => DriveWaveform::none(),
            DriveName::Dc => wrap(DriveWaveform::dc(need("f0", f0)?))?,
            DriveName::Sinusoidal => wrap(DriveWaveform::sinusoidal(need("f0", f0)?, need("omega", omega)?))?,
            DriveName::Square => wrap(DriveWaveform::square(need("f0", f0)?, need("omega", omega)?))?,
            DriveName::Sampled => {
                let samples = self
                    .samples
                    .clone()
                    .ok_or_else(|| CliError::Config("drive.samples is required for kind = \"sampled\"".into()))?;
                wrap(DriveWaveform::sampled(samples, need("omega", omega)?))?
            }
        };
        Ok(if self.time_offset != 0.0 {
            drive.shifted(self.time_offset)
        } else {
            drive
        })
    }

    pub fn family(&self) -> Result<DriveFamily, CliError> {
        match self.kind {
            DriveName::Sinusoidal => Ok(DriveFamily::Sinusoidal),
            DriveName::Square => Ok(DriveFamily::Square),
            other => Err(CliError::Config(format!(
                "sweeps need a sinusoidal or square drive, got {other:?}"
            ))),
        }
    }
}

impl RunSection {
    pub fn initial(&self) -> Result<InitialState, CliError> {
        match (&self.initial_site, &self.initial_amplitudes) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "run: give either initial_site or initial_amplitudes, not both".into(),
            )),
            (Some(n), None) => Ok(InitialState::Site(*n)),
            (None, Some(v)) => Ok(InitialState::Amplitudes(
                v.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            )),
            (None, None) => Ok(InitialState::Site(0)),
        }
    }
}

impl ConfigFile {
    /// The single-run configuration described by `profile`, `drive` and `run`.
    pub fn simulation(&self) -> Result<SimulationConfig, CliError> {
        let profile = self.profile.build()?;
        let drive = self.drive.build(profile.rho.norm())?;
        self.simulation_with(profile, drive)
    }

    pub fn simulation_with(&self, profile: HoppingProfile, drive: DriveWaveform) -> Result<SimulationConfig, CliError> {
        let run = &self.run;
        let period = drive.period();
        let t_end = match (run.t_end, run.periods, period) {
            (Some(_), Some(_), _) => {
                return Err(CliError::Config("run: give either t_end or periods, not both".into()))
            }
            (Some(t), None, _) => t,
            (None, Some(k), Some(t)) => k * t,
            (None, Some(_), None) => return Err(CliError::Config("run.periods needs a periodic drive".into())),
            (None, None, Some(t)) => t,
            (None, None, None) => return Err(CliError::Config("run.t_end is required for aperiodic drives".into())),
        };
        let dt = match (run.dt, run.steps_per_period, period) {
            (Some(_), Some(_), _) => {
                return Err(CliError::Config("run: give either dt or steps_per_period, not both".into()))
            }
            (Some(dt), None, _) => dt,
            (None, Some(0), _) => return Err(CliError::Config("run.steps_per_period must be positive".into())),
            (None, Some(s), Some(t)) => t / s as f64,
            (None, Some(_), None) => {
                return Err(CliError::Config("run.steps_per_period needs a periodic drive".into()))
            }
            (None, None, _) => SimulationConfig::default_dt(&profile, &drive),
        };
        let record_stride = match run.record_stride {
            Some(s) => s,
            None if dt > 0.0 && t_end > 0.0 => ((t_end / dt).round() as usize / DEFAULT_SAMPLES).max(1),
            None => 1,
        };
        let config = SimulationConfig {
            profile,
            drive,
            initial: run.initial()?,
            dt,
            t_end,
            record_stride,
            frame: run.frame.into(),
            integrator: run.integrator.into(),
        };
        config.validate().map_err(|e| CliError::Config(format!("run: {e}")))?;
        Ok(config)
    }
}
