//! Scalar diagnostics of recorded trajectories.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Frame;
use crate::propagate::{Trajectory, LEAKAGE_SITES};

/// Channel names in output order.
pub const CHANNELS: [&str; 6] = ["revival", "norm", "mean", "spread", "participation", "leakage"];

/// Named series sampled on a trajectory's time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub frame: Frame,
    pub revival: Vec<f64>,
    pub norm: Vec<f64>,
    pub mean: Vec<f64>,
    pub spread: Vec<f64>,
    pub participation: Vec<f64>,
    pub leakage: Vec<f64>,
}

impl ObservableSeries {
    /// All channels, with P_r computed from states expressed in `frame`.
    pub fn from_trajectory(traj: &Trajectory, frame: Frame) -> Self {
        let m = moments(traj);
        Self {
            times: traj.times.clone(),
            frame,
            revival: revival_probability_in(traj, frame),
            norm: traj.states.iter().map(|s| norm_sqr(s)).collect(),
            mean: m.mean,
            spread: m.spread,
            participation: traj.states.iter().map(|s| participation_ratio(s)).collect(),
            leakage: traj.states.iter().map(|s| boundary_weight(s)).collect(),
        }
    }

    /// Channel by name, in the order of [`CHANNELS`].
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        Some(match name {
            "revival" => &self.revival,
            "norm" => &self.norm,
            "mean" => &self.mean,
            "spread" => &self.spread,
            "participation" => &self.participation,
            "leakage" => &self.leakage,
            _ => return None,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn norm_sqr(psi: &[Complex64]) -> f64 {
    psi.iter().map(|c| c.norm_sqr()).sum()
}

fn overlap_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

/// P_r(t) = |⟨ψ(0)|ψ(t)⟩|² in the frame the states were stored in.
pub fn revival_probability(traj: &Trajectory) -> Vec<f64> {
    let first = &traj.states[0];
    traj.states.iter().map(|s| overlap_sqr(first, s)).collect()
}

/// P_r(t) after re-expressing every state in `frame`.
pub fn revival_probability_in(traj: &Trajectory, frame: Frame) -> Vec<f64> {
    if frame == traj.frame {
        revival_probability(traj)
    } else {
        revival_probability(&traj.in_frame(frame))
    }
}

/// Outcome of comparing the sample nearest kT with the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfImaging {
    pub k: usize,
    /// max_n | |c_n(kT)| − |c_n(0)| |.
    pub error: f64,
    pub sample: usize,
    /// Sample time minus kT.
    pub offset: f64,
}

/// Modulus-based revival error after `k` drive periods.
pub fn self_imaging_error(traj: &Trajectory, k: usize) -> Result<SelfImaging> {
    let period = traj.drive().require_period()?;
    let target = k as f64 * period;
    let t_end = *traj.times.last().unwrap();
    if target > t_end + 0.5 * traj.dt {
        return Err(Error::InvalidConfig(format!(
            "{k} periods ({target}) lie beyond the trajectory end {t_end}"
        )));
    }
    let (sample, offset) = traj.nearest_sample(target);
    let error = traj.states[0]
        .iter()
        .zip(&traj.states[sample])
        .fold(0.0f64, |m, (a, b)| m.max((a.norm() - b.norm()).abs()));
    Ok(SelfImaging {
        k,
        error,
        sample,
        offset,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    /// ⟨n⟩ per sample.
    pub mean: Vec<f64>,
    /// Δn = √(⟨n²⟩ − ⟨n⟩²) per sample.
    pub spread: Vec<f64>,
}

pub fn moments(traj: &Trajectory) -> Moments {
    let (mean, spread) = traj.states.iter().map(|s| site_moments(s)).unzip();
    Moments { mean, spread }
}

/// (⟨n⟩, Δn) of one amplitude vector, normalized by its own weight.
pub fn site_moments(psi: &[Complex64]) -> (f64, f64) {
    let total = norm_sqr(psi);
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let (m1, m2) = psi.iter().enumerate().fold((0.0, 0.0), |(a, b), (n, c)| {
        let p = c.norm_sqr();
        let n = n as f64;
        (a + n * p, b + n * n * p)
    });
    let mean = m1 / total;
    (mean, (m2 / total - mean * mean).max(0.0).sqrt())
}

/// (Σp)² / Σp²: the effective number of occupied sites.
pub fn participation_ratio(psi: &[Complex64]) -> f64 {
    let (s1, s2) = psi.iter().fold((0.0, 0.0), |(a, b), c| {
        let p = c.norm_sqr();
        (a + p, b + p * p)
    });
    if s2 == 0.0 {
        0.0
    } else {
        s1 * s1 / s2
    }
}

/// Weight on the top sites watched by the leakage monitor.
pub fn boundary_weight(psi: &[Complex64]) -> f64 {
    let start = psi.len().saturating_sub(LEAKAGE_SITES);
    norm_sqr(&psi[start..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveWaveform, HoppingProfile, InitialState, SimulationConfig};
    use crate::propagate::evolve;

    const J0_ZERO_1: f64 = 2.404_825_557_695_773;

    fn config(ratio: f64, site: usize, frame: Frame) -> SimulationConfig {
        let omega = 0.5;
        let drive = DriveWaveform::sinusoidal(ratio * omega, omega).unwrap();
        let t = drive.period().unwrap();
        SimulationConfig {
            profile: HoppingProfile::glauber_fock(1.0, 60),
            drive,
            initial: InitialState::Site(site),
            dt: t / 4000.0,
            t_end: 2.0 * t,
            record_stride: 100,
            frame,
            integrator: Default::default(),
        }
    }

    #[test]
    fn revival_starts_at_one() {
        let traj = evolve(&config(J0_ZERO_1, 0, Frame::Lab)).unwrap();
        let pr = revival_probability(&traj);
        assert!((pr[0] - 1.0).abs() < 1e-15);
        assert!(pr.iter().all(|p| *p <= 1.0 + 1e-9 && *p >= 0.0));
    }

    #[test]
    fn self_imaging_at_dl_and_off_it() {
        let traj = evolve(&config(J0_ZERO_1, 0, Frame::Lab)).unwrap();
        assert_eq!(self_imaging_error(&traj, 0).unwrap().error, 0.0);
        let one = self_imaging_error(&traj, 1).unwrap();
        assert!(one.error <= 1e-4, "{}", one.error);
        assert!(one.offset.abs() < 1e-9);
        assert!(self_imaging_error(&traj, 3).is_err());

        let off = evolve(&config(1.5, 0, Frame::Lab)).unwrap();
        assert!(self_imaging_error(&off, 1).unwrap().error > 0.1);
    }

    #[test]
    fn frames_agree_on_moduli_metrics() {
        let lab = evolve(&config(J0_ZERO_1, 0, Frame::Lab)).unwrap();
        let gauge = evolve(&config(J0_ZERO_1, 0, Frame::Gauge)).unwrap();
        let a = self_imaging_error(&lab, 1).unwrap().error;
        let b = self_imaging_error(&gauge.in_frame(Frame::Lab), 1).unwrap().error;
        let c = self_imaging_error(&gauge, 1).unwrap().error;
        assert!((b - c).abs() < 1e-15);
        assert!((a - c).abs() < 1e-4);
    }

    #[test]
    fn moments_of_a_site_state() {
        let mut cfg = config(J0_ZERO_1, 10, Frame::Lab);
        cfg.t_end = 0.0;
        let m = moments(&evolve(&cfg).unwrap());
        assert_eq!(m.mean, vec![10.0]);
        assert_eq!(m.spread, vec![0.0]);
    }

    #[test]
    fn undriven_mean_is_poisson() {
        let mut cfg = config(J0_ZERO_1, 0, Frame::Lab);
        cfg.drive = DriveWaveform::none();
        cfg.dt = 1e-3;
        cfg.t_end = 1.5;
        let traj = evolve(&cfg).unwrap();
        let m = moments(&traj);
        for (t, mean) in traj.times.iter().zip(&m.mean) {
            assert!((mean - t * t).abs() < 1e-8, "t {t}: {mean}");
        }
    }

    #[test]
    fn mean_returns_at_dl() {
        let traj = evolve(&config(J0_ZERO_1, 0, Frame::Lab)).unwrap();
        let m = moments(&traj);
        let (i, _) = traj.nearest_sample(traj.config.drive.period().unwrap());
        assert!((m.mean[i] - m.mean[0]).abs() < 1e-3);
    }

    #[test]
    fn series_channels() {
        let traj = evolve(&config(J0_ZERO_1, 0, Frame::Gauge)).unwrap();
        let s = ObservableSeries::from_trajectory(&traj, Frame::Lab);
        for name in CHANNELS {
            assert_eq!(s.channel(name).unwrap().len(), traj.len());
        }
        assert!(s.channel("bogus").is_none());
        assert!(s.norm.iter().all(|n| (n - 1.0).abs() < 1e-9));
        assert!((s.participation[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn participation_of_uniform_vector() {
        let v = vec![Complex64::new(0.5, 0.0); 4];
        assert!((participation_ratio(&v) - 4.0).abs() < 1e-15);
        assert_eq!(participation_ratio(&[]), 0.0);
    }
}
