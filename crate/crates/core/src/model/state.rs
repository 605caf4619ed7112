use num_complex::Complex64;
use serde::Serialize;

use super::{DriveWaveform, HoppingProfile};
use crate::error::{Error, Result};

/// Lab frame amplitudes c_n, or gauge frame amplitudes b_n = c_n·exp[inΦ(t)].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Lab,
    Gauge,
}

/// Rational approximant used for the midpoint-frozen exponential
/// exp(−i·dt·H) in each step. Both are exactly unitary and second order
/// in dt overall; `Pade` carries a far smaller error constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// (1 − i·dt·H/2)/(1 + i·dt·H/2).
    Cayley,
    /// Diagonal [2/2] Padé, applied as two complex-shifted tridiagonal solves.
    #[default]
    Pade,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    pub frame: Frame,
}

impl LatticeState {
    pub fn new(amplitudes: Vec<Complex64>, time: f64, frame: Frame) -> Self {
        Self {
            amplitudes,
            time,
            frame,
        }
    }

    /// δ_{n,site} on sites 0..=max_site.
    pub fn site(max_site: usize, site: usize, time: f64, frame: Frame) -> Result<Self> {
        if site > max_site {
            return Err(Error::SiteOutOfRange {
                index: site,
                max: max_site,
            });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); max_site + 1];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        Ok(Self::new(amplitudes, time, frame))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn occupations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Highest site carrying a nonzero amplitude.
    pub fn support_top(&self) -> Option<usize> {
        self.amplitudes.iter().rposition(|c| *c != Complex64::new(0.0, 0.0))
    }

    /// The same state expressed in `frame` at its own time.
    pub fn to_frame(&self, frame: Frame, drive: &DriveWaveform) -> Self {
        use super::{gauge_transform, GaugeDirection};
        match (self.frame, frame) {
            (Frame::Lab, Frame::Gauge) => gauge_transform(self, drive, GaugeDirection::LabToGauge),
            (Frame::Gauge, Frame::Lab) => gauge_transform(self, drive, GaugeDirection::GaugeToLab),
            _ => self.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Site(usize),
    Amplitudes(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub profile: HoppingProfile,
    pub drive: DriveWaveform,
    pub initial: InitialState,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub frame: Frame,
    pub integrator: Integrator,
}

impl SimulationConfig {
    /// Default step: T/2000 for periodic drives, 0.001/|ρ| otherwise.
    pub fn default_dt(profile: &HoppingProfile, drive: &DriveWaveform) -> f64 {
        match drive.period() {
            Some(t) => t / 2000.0,
            None => {
                let r = profile.rho.norm();
                if r > 0.0 {
                    1e-3 / r
                } else {
                    1e-3
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
        }
        match &self.initial {
            InitialState::Site(n) if *n > self.profile.max_site => Err(Error::SiteOutOfRange {
                index: *n,
                max: self.profile.max_site,
            }),
            InitialState::Amplitudes(v) if v.len() != self.profile.len() => Err(Error::InvalidConfig(format!(
                "initial vector has {} entries, lattice has {}",
                v.len(),
                self.profile.len()
            ))),
            InitialState::Amplitudes(v) => {
                let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum();
                if norm.is_finite() && norm > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidConfig("initial vector must have finite nonzero norm".into()))
                }
            }
            _ => Ok(()),
        }
    }

    /// Normalized lab-frame initial state at t = 0. Φ(0) = 0, so the
    /// same amplitudes serve as the gauge-frame initial state.
    pub fn initial_state(&self) -> Result<LatticeState> {
        self.validate()?;
        match &self.initial {
            InitialState::Site(n) => LatticeState::site(self.profile.max_site, *n, 0.0, self.frame),
            InitialState::Amplitudes(v) => {
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                Ok(LatticeState::new(v.iter().map(|c| c / norm).collect(), 0.0, self.frame))
            }
        }
    }
}
