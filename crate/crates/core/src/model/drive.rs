use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Shape of the external force before any time shift.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriveShape {
    None,
    Dc {
        f0: f64,
    },
    /// F(t) = F0·cos(ωt).
    Sinusoidal {
        f0: f64,
        omega: f64,
    },
    /// +F0 on [0, T/2), −F0 on [T/2, T), repeated.
    Square {
        f0: f64,
        omega: f64,
    },
    /// Values at t_j = j·T/M, j = 0..M, linearly interpolated and wrapped
    /// so that the last sample connects back to the first.
    Sampled {
        samples: Vec<f64>,
        omega: f64,
        #[serde(skip)]
        cumulative: Vec<f64>,
    },
}

/// External force F(t), optionally observed from a shifted time origin:
/// `F(t) = shape(t + time_offset)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriveWaveform {
    pub shape: DriveShape,
    pub time_offset: f64,
}

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDrive(format!("{name} must be finite, got {v}")))
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDrive(format!(
            "omega must be positive and finite, got {omega}"
        )))
    }
}

impl DriveWaveform {
    fn from_shape(shape: DriveShape) -> Self {
        Self {
            shape,
            time_offset: 0.0,
        }
    }

    pub fn none() -> Self {
        Self::from_shape(DriveShape::None)
    }

    pub fn dc(f0: f64) -> Result<Self> {
        check_finite("F0", f0)?;
        Ok(Self::from_shape(DriveShape::Dc { f0 }))
    }

    pub fn sinusoidal(f0: f64, omega: f64) -> Result<Self> {
        check_finite("F0", f0)?;
        check_omega(omega)?;
        Ok(Self::from_shape(DriveShape::Sinusoidal { f0, omega }))
    }

    pub fn square(f0: f64, omega: f64) -> Result<Self> {
        check_finite("F0", f0)?;
        check_omega(omega)?;
        Ok(Self::from_shape(DriveShape::Square { f0, omega }))
    }

    pub fn sampled(samples: Vec<f64>, omega: f64) -> Result<Self> {
        check_omega(omega)?;
        if samples.is_empty() {
            return Err(Error::InvalidDrive("sample table is empty".into()));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidDrive(format!("non-finite sample {v}")));
        }
        let m = samples.len();
        let h = 2.0 * PI / omega / m as f64;
        let mut cumulative = Vec::with_capacity(m + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for j in 0..m {
            acc += 0.5 * h * (samples[j] + samples[(j + 1) % m]);
            cumulative.push(acc);
        }
        Ok(Self::from_shape(DriveShape::Sampled {
            samples,
            omega,
            cumulative,
        }))
    }

    /// Same waveform seen from the time origin t0: F'(t) = F(t + t0).
    pub fn shifted(&self, t0: f64) -> Self {
        Self {
            shape: self.shape.clone(),
            time_offset: self.time_offset + t0,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match &self.shape {
            DriveShape::None | DriveShape::Dc { .. } => None,
            DriveShape::Sinusoidal { omega, .. }
            | DriveShape::Square { omega, .. }
            | DriveShape::Sampled { omega, .. } => Some(*omega),
        }
    }

    /// T = 2π/ω for the periodic kinds.
    pub fn period(&self) -> Option<f64> {
        self.omega().map(|w| 2.0 * PI / w)
    }

    pub fn require_period(&self) -> Result<f64> {
        self.period()
            .ok_or_else(|| Error::NotPeriodic(format!("{:?}", self.shape)))
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            DriveShape::None => true,
            DriveShape::Dc { f0 }
            | DriveShape::Sinusoidal { f0, .. }
            | DriveShape::Square { f0, .. } => *f0 == 0.0,
            DriveShape::Sampled { samples, .. } => samples.iter().all(|v| *v == 0.0),
        }
    }

    /// Time scale that the quadrature grid must resolve, if any.
    pub(crate) fn resolution_scale(&self) -> Option<f64> {
        match &self.shape {
            DriveShape::None => None,
            DriveShape::Dc { f0 } if *f0 == 0.0 => None,
            DriveShape::Dc { f0 } => Some(2.0 * PI / f0.abs()),
            _ => {
                let t = self.period().unwrap();
                // fast phase winding needs more than the period alone
                let phase_rate = self.max_abs_force();
                if phase_rate > 0.0 {
                    Some(t.min(2.0 * PI / phase_rate * 8.0))
                } else {
                    Some(t)
                }
            }
        }
    }

    fn max_abs_force(&self) -> f64 {
        match &self.shape {
            DriveShape::None => 0.0,
            DriveShape::Dc { f0 } | DriveShape::Sinusoidal { f0, .. } | DriveShape::Square { f0, .. } => {
                f0.abs()
            }
            DriveShape::Sampled { samples, .. } => samples.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// F(t).
    pub fn force(&self, t: f64) -> f64 {
        let s = t + self.time_offset;
        match &self.shape {
            DriveShape::None => 0.0,
            DriveShape::Dc { f0 } => *f0,
            DriveShape::Sinusoidal { f0, omega } => f0 * (omega * s).cos(),
            DriveShape::Square { f0, omega } => {
                let period = 2.0 * PI / omega;
                let tau = s.rem_euclid(period);
                if tau < 0.5 * period {
                    *f0
                } else {
                    -f0
                }
            }
            DriveShape::Sampled { samples, omega, .. } => {
                let m = samples.len();
                let h = 2.0 * PI / omega / m as f64;
                let (j, u) = cell(s, h, m);
                let a = samples[j];
                let b = samples[(j + 1) % m];
                a + (b - a) * u / h
            }
        }
    }

    /// Φ(t) = ∫₀ᵗ F(t′)dt′, evaluated in closed form for every shape.
    pub fn phase(&self, t: f64) -> f64 {
        self.base_antiderivative(t + self.time_offset) - self.base_antiderivative(self.time_offset)
    }

    /// ∫₀ˢ shape(s′)ds′.
    fn base_antiderivative(&self, s: f64) -> f64 {
        match &self.shape {
            DriveShape::None => 0.0,
            DriveShape::Dc { f0 } => f0 * s,
            DriveShape::Sinusoidal { f0, omega } => f0 / omega * (omega * s).sin(),
            DriveShape::Square { f0, omega } => {
                // piecewise linear and continuous; Φ(T) = 0
                let period = 2.0 * PI / omega;
                let tau = s.rem_euclid(period);
                if tau < 0.5 * period {
                    f0 * tau
                } else {
                    f0 * (period - tau)
                }
            }
            DriveShape::Sampled {
                samples,
                omega,
                cumulative,
            } => {
                let m = samples.len();
                let period = 2.0 * PI / omega;
                let h = period / m as f64;
                let k = (s / period).floor();
                let (j, u) = cell(s, h, m);
                let a = samples[j];
                let b = samples[(j + 1) % m];
                k * cumulative[m] + cumulative[j] + a * u + (b - a) * u * u / (2.0 * h)
            }
        }
    }

    /// Times strictly inside (a, b) where F or its derivative jumps.
    pub(crate) fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        let spacing = match &self.shape {
            DriveShape::Square { omega, .. } => PI / omega,
            DriveShape::Sampled { samples, omega, .. } => 2.0 * PI / omega / samples.len() as f64,
            _ => return Vec::new(),
        };
        let off = self.time_offset;
        let first = ((a + off) / spacing).floor() as i64 + 1;
        let mut out = Vec::new();
        let mut k = first;
        loop {
            let t = k as f64 * spacing - off;
            if t >= b {
                break;
            }
            // skip breakpoints that coincide with the ends up to rounding
            if t - a > 1e-12 * spacing && b - t > 1e-12 * spacing {
                out.push(t);
            }
            k += 1;
        }
        out
    }
}

/// Cell index and offset of `s` on a wrapped grid of `m` cells of width `h`.
fn cell(s: f64, h: f64, m: usize) -> (usize, f64) {
    let period = h * m as f64;
    let tau = s.rem_euclid(period);
    let j = ((tau / h).floor() as usize).min(m - 1);
    (j, tau - j as f64 * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoidal_force_and_phase() {
        let omega = 0.5;
        let d = DriveWaveform::sinusoidal(2.405 * omega, omega).unwrap();
        let t = d.period().unwrap();
        assert!((d.force(0.0) - 2.405 * omega).abs() < 1e-15);
        assert!((d.phase(t / 4.0) - 2.405).abs() < 1e-12);
        assert!(d.phase(t).abs() < 1e-12);
    }

    #[test]
    fn dc_phase_is_linear() {
        let d = DriveWaveform::dc(0.3).unwrap();
        assert!((d.phase(7.0) - 2.1).abs() < 1e-14);
        assert!(d.period().is_none());
    }

    #[test]
    fn none_phase_is_zero() {
        let d = DriveWaveform::none();
        assert_eq!(d.phase(123.0), 0.0);
        assert_eq!(d.force(1.0), 0.0);
    }

    #[test]
    fn square_wave_values() {
        let d = DriveWaveform::square(2.0, 1.0).unwrap();
        let t = d.period().unwrap();
        assert_eq!(d.force(0.1 * t), 2.0);
        assert_eq!(d.force(0.6 * t), -2.0);
        assert_eq!(d.force(1.1 * t), 2.0);
        assert!((d.phase(0.5 * t) - 2.0 * 0.5 * t).abs() < 1e-12);
        assert!(d.phase(t).abs() < 1e-12);
        assert!((d.phase(0.75 * t) - 2.0 * 0.25 * t).abs() < 1e-12);
    }

    #[test]
    fn sampled_interpolates_and_wraps() {
        let d = DriveWaveform::sampled(vec![0.0, 1.0, 0.0, -1.0], 1.0).unwrap();
        let h = d.period().unwrap() / 4.0;
        assert!((d.force(0.5 * h) - 0.5).abs() < 1e-14);
        assert!((d.force(3.5 * h) + 0.5).abs() < 1e-14);
        assert!((d.force(4.5 * h) - 0.5).abs() < 1e-14);
        // triangle wave: area of first half-period is h
        assert!((d.phase(2.0 * h) - h).abs() < 1e-14);
        assert!(d.phase(4.0 * h).abs() < 1e-14);
    }

    #[test]
    fn sampled_phase_matches_trapezoid_quadrature() {
        let samples: Vec<f64> = (0..7).map(|j| (j as f64 * 0.9).sin() + 0.3).collect();
        let d = DriveWaveform::sampled(samples, 0.8).unwrap();
        let t_end = 2.3 * d.period().unwrap();
        let n = 200_000;
        let h = t_end / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let t = k as f64 * h;
            acc += 0.5 * h * (d.force(t) + d.force(t + h));
        }
        assert!((acc - d.phase(t_end)).abs() < 1e-6);
    }

    #[test]
    fn shifted_phase_starts_at_zero() {
        let d = DriveWaveform::sinusoidal(1.0, 2.0).unwrap().shifted(0.4);
        assert_eq!(d.phase(0.0), 0.0);
        assert!((d.force(0.1) - (2.0f64 * 0.5).cos()).abs() < 1e-14);
    }

    #[test]
    fn breakpoints_for_square_wave() {
        let d = DriveWaveform::square(1.0, PI).unwrap(); // T = 2
        assert_eq!(d.breakpoints(0.0, 3.0), vec![1.0, 2.0]);
        assert_eq!(d.breakpoints(0.0, 2.0), vec![1.0]);
        assert!(DriveWaveform::sinusoidal(1.0, 1.0).unwrap().breakpoints(0.0, 10.0).is_empty());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DriveWaveform::sinusoidal(1.0, 0.0).is_err());
        assert!(DriveWaveform::square(f64::NAN, 1.0).is_err());
        assert!(DriveWaveform::sampled(vec![], 1.0).is_err());
        assert!(DriveWaveform::none().require_period().is_err());
    }
}
