//! Lattices, drives, the accumulated phase Φ(t), the path integral σ(t),
//! the gauge rephasing and the dynamic-localization conditions.

mod drive;
mod profile;
pub(crate) mod quad;
mod state;

pub use drive::{DriveShape, DriveWaveform};
pub use profile::{HoppingProfile, ProfileKind};
pub use state::{Frame, InitialState, Integrator, LatticeState, SimulationConfig};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Φ(t) = ∫₀ᵗ F(t′)dt′.
pub fn phase_integral(drive: &DriveWaveform, t: f64) -> f64 {
    drive.phase(t)
}

/// σ(t) = ρ·∫₀ᵗ exp[−iΦ(t′)]dt′.
pub fn sigma(drive: &DriveWaveform, rho: Complex64, t: f64) -> Complex64 {
    rho * quad::integrate_exp_phase(drive, 0.0, t)
}

/// ∫₀ᵀ exp[−iΦ(t)]dt over one drive period. Vanishes exactly when the
/// drive produces dynamic localization.
pub fn dl_residual(drive: &DriveWaveform) -> Result<Complex64> {
    let period = drive.require_period()?;
    Ok(quad::integrate_exp_phase(drive, 0.0, period))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveFamily {
    Sinusoidal,
    Square,
}

impl DriveFamily {
    pub fn build(self, f0: f64, omega: f64) -> Result<DriveWaveform> {
        match self {
            DriveFamily::Sinusoidal => DriveWaveform::sinusoidal(f0, omega),
            DriveFamily::Square => DriveWaveform::square(f0, omega),
        }
    }
}

impl std::str::FromStr for DriveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sinusoidal" | "sin" | "cos" => Ok(DriveFamily::Sinusoidal),
            "square" => Ok(DriveFamily::Square),
            other => Err(Error::InvalidDrive(format!("unknown drive family '{other}'"))),
        }
    }
}

/// Bracketing grid for [`find_dl_amplitude`], in units of F0/ω.
#[derive(Debug, Clone, Copy)]
pub struct RootScan {
    pub step: f64,
    pub max_ratio: f64,
}

impl Default for RootScan {
    fn default() -> Self {
        Self {
            step: 0.05,
            max_ratio: 20.0,
        }
    }
}

/// Residual below which a bisected sign change counts as a root, relative
/// to the period.
const ROOT_ACCEPT: f64 = 1e-9;

/// All F0 > 0 with vanishing DL residual for `family` at frequency `omega`,
/// in increasing order, up to `scan.max_ratio·ω`.
///
/// Sign changes of Re(residual) along the scan are bisected; a candidate is
/// kept only when the full complex residual vanishes there, which filters
/// the sign changes where only the real part crosses zero.
pub fn dl_amplitudes(family: DriveFamily, omega: f64, scan: RootScan) -> Result<Vec<f64>> {
    let period = 2.0 * std::f64::consts::PI / omega;
    let residual = |ratio: f64| -> Result<Complex64> { dl_residual(&family.build(ratio * omega, omega)?) };

    let steps = (scan.max_ratio / scan.step).round() as usize;
    let mut roots: Vec<f64> = Vec::new();
    let mut x_prev = 0.0;
    let mut r_prev = residual(x_prev)?.re;
    for k in 1..=steps {
        let x = k as f64 * scan.step;
        let r = residual(x)?.re;
        if r_prev * r <= 0.0 {
            let (mut lo, mut hi, mut r_lo) = (x_prev, x, r_prev);
            if r_prev == 0.0 {
                hi = lo;
            } else if r == 0.0 {
                lo = hi;
            }
            while hi - lo > 1e-14 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                let r_mid = residual(mid)?.re;
                if r_mid == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (r_mid < 0.0) == (r_lo < 0.0) {
                    lo = mid;
                    r_lo = r_mid;
                } else {
                    hi = mid;
                }
            }
            let root = 0.5 * (lo + hi);
            let accepted = root > 0.0 && residual(root)?.norm() <= ROOT_ACCEPT * period;
            let duplicate = roots.last().is_some_and(|p| (root - p).abs() < 1e-9);
            if accepted && !duplicate {
                roots.push(root);
            }
        }
        x_prev = x;
        r_prev = r;
    }
    Ok(roots.into_iter().map(|x| x * omega).collect())
}

/// The `k`-th smallest (k ≥ 1) drive amplitude F0 > 0 satisfying the
/// DL condition.
pub fn find_dl_amplitude(family: DriveFamily, omega: f64, k: usize) -> Result<f64> {
    find_dl_amplitude_in(family, omega, k, RootScan::default())
}

pub fn find_dl_amplitude_in(family: DriveFamily, omega: f64, k: usize, scan: RootScan) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("root index starts at 1".into()));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidDrive(format!("omega must be positive, got {omega}")));
    }
    let roots = dl_amplitudes(family, omega, scan)?;
    roots.get(k - 1).copied().ok_or(Error::RootSearchFailed {
        lo: 0.0,
        hi: scan.max_ratio * omega,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    LabToGauge,
    GaugeToLab,
}

/// Rephases amplitude n by exp[±inΦ(t)]: b_n = c_n·exp[inΦ] (lab → gauge)
/// and c_n = b_n·exp[−inΦ] (gauge → lab).
pub fn gauge_transform(state: &LatticeState, drive: &DriveWaveform, direction: GaugeDirection) -> LatticeState {
    let phi = drive.phase(state.time);
    let (sign, frame) = match direction {
        GaugeDirection::LabToGauge => (1.0, Frame::Gauge),
        GaugeDirection::GaugeToLab => (-1.0, Frame::Lab),
    };
    let amplitudes = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(n, c)| {
            if n == 0 || phi == 0.0 {
                *c
            } else {
                c * Complex64::cis(sign * n as f64 * phi)
            }
        })
        .collect();
    LatticeState {
        amplitudes,
        time: state.time,
        frame,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const J0_ZERO_1: f64 = 2.404_825_557_695_773;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sigma_without_drive_is_linear() {
        let rho = c(0.8, -0.3);
        let s = sigma(&DriveWaveform::none(), rho, 3.5);
        assert!((s - rho * 3.5).norm() < 1e-14);
    }

    #[test]
    fn sigma_vanishes_at_first_bessel_zero() {
        let omega = 0.5;
        let d = DriveWaveform::sinusoidal(J0_ZERO_1 * omega, omega).unwrap();
        let t = d.period().unwrap();
        let rho = c(1.0, 0.0);
        assert!(sigma(&d, rho, t).norm() < 1e-8 * t);
    }

    #[test]
    fn sigma_dc_closed_form() {
        let f0 = 0.7;
        let d = DriveWaveform::dc(f0).unwrap();
        let t = 13.0;
        let exact = (c(1.0, 0.0) - Complex64::cis(-f0 * t)) / c(0.0, f0);
        assert!((sigma(&d, c(1.0, 0.0), t) - exact).norm() < 1e-11);
    }

    #[test]
    fn sigma_bounded_by_rho_t() {
        let d = DriveWaveform::sinusoidal(1.3, 0.9).unwrap();
        for &t in &[0.1, 1.0, 5.0, 17.0] {
            assert!(sigma(&d, c(0.6, 0.0), t).norm() <= 0.6 * t + 1e-12);
        }
    }

    #[test]
    fn residual_without_drive_rejected() {
        assert!(matches!(dl_residual(&DriveWaveform::none()), Err(Error::NotPeriodic(_))));
        assert!(dl_residual(&DriveWaveform::dc(1.0).unwrap()).is_err());
    }

    #[test]
    fn residual_with_zero_amplitude_is_period() {
        let d = DriveWaveform::sinusoidal(0.0, 2.0).unwrap();
        let r = dl_residual(&d).unwrap();
        assert!((r - c(PI, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn residual_at_rounded_ratio_is_small() {
        let omega = 0.5;
        let d = DriveWaveform::sinusoidal(2.405 * omega, omega).unwrap();
        let t = d.period().unwrap();
        assert!(dl_residual(&d).unwrap().norm() < 1e-3 * t);
    }

    #[test]
    fn square_residual_matches_piecewise_closed_form() {
        // ∫ over the rising half gives (1 − e^{−ia})/(iF0), the falling half
        // the same, with a = F0·T/2.
        for &(f0, omega) in &[(1.0, 1.0), (3.7, 0.5), (0.2, 2.0)] {
            let d = DriveWaveform::square(f0, omega).unwrap();
            let t = d.period().unwrap();
            let a = f0 * t / 2.0;
            let expected = (c(1.0, 0.0) - Complex64::cis(-a)) * 2.0 / c(0.0, f0);
            assert!((dl_residual(&d).unwrap() - expected).norm() < 1e-11 * t);
        }
    }

    #[test]
    fn sinusoidal_root_finder_first_root() {
        let f0 = find_dl_amplitude(DriveFamily::Sinusoidal, 1.0, 1).unwrap();
        assert!((f0 - 2.405).abs() < 1e-3);
        assert!((f0 - J0_ZERO_1).abs() < 1e-9);
    }

    #[test]
    fn root_scales_with_frequency() {
        let a = find_dl_amplitude(DriveFamily::Sinusoidal, 0.5, 1).unwrap();
        let b = find_dl_amplitude(DriveFamily::Sinusoidal, 1.0, 1).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-9);
    }

    #[test]
    fn square_roots_are_even_multiples_of_omega() {
        let roots = dl_amplitudes(DriveFamily::Square, 1.0, RootScan::default()).unwrap();
        assert_eq!(roots.len(), 10);
        for (k, r) in roots.iter().enumerate() {
            assert!((r - 2.0 * (k + 1) as f64).abs() < 1e-9, "root {k} = {r}");
        }
    }

    #[test]
    fn root_index_beyond_scan_fails() {
        let err = find_dl_amplitude_in(
            DriveFamily::Sinusoidal,
            1.0,
            3,
            RootScan {
                step: 0.05,
                max_ratio: 6.0,
            },
        )
        .unwrap_err();
        assert_eq!(err, Error::RootSearchFailed { lo: 0.0, hi: 6.0 });
        assert!(find_dl_amplitude(DriveFamily::Sinusoidal, 1.0, 0).is_err());
    }

    #[test]
    fn gauge_transform_at_origin_is_identity() {
        let d = DriveWaveform::sinusoidal(1.0, 1.0).unwrap();
        let s = LatticeState::new(vec![c(0.6, 0.0), c(0.0, 0.8)], 0.0, Frame::Lab);
        let g = gauge_transform(&s, &d, GaugeDirection::LabToGauge);
        assert_eq!(g.amplitudes, s.amplitudes);
        assert_eq!(g.frame, Frame::Gauge);
    }

    #[test]
    fn gauge_transform_dc_phases() {
        let f0 = 0.3;
        let t = 2.0;
        let d = DriveWaveform::dc(f0).unwrap();
        let a = 1.0 / 3f64.sqrt();
        let s = LatticeState::new(vec![c(a, 0.0); 3], t, Frame::Gauge);
        let lab = gauge_transform(&s, &d, GaugeDirection::GaugeToLab);
        for n in 0..3 {
            let expected = Complex64::cis(-(n as f64) * f0 * t) * a;
            assert!((lab.amplitudes[n] - expected).norm() < 1e-15);
        }
        let back = gauge_transform(&lab, &d, GaugeDirection::LabToGauge);
        for n in 0..3 {
            assert!((back.amplitudes[n] - s.amplitudes[n]).norm() < 1e-15);
        }
    }

    #[test]
    fn gauge_transform_leaves_site_zero() {
        let d = DriveWaveform::dc(1.7).unwrap();
        let s = LatticeState::site(4, 0, 3.3, Frame::Lab).unwrap();
        let g = gauge_transform(&s, &d, GaugeDirection::LabToGauge);
        assert_eq!(g.amplitudes, s.amplitudes);
    }
}
