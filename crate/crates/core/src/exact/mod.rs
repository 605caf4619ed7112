//! Closed-form evolution of the driven Glauber-Fock chain.
//!
//! In the gauge frame the chain is the Fock-space image of a single bosonic
//! mode with Hamiltonian −ρ(t)â − ρ*(t)â†, ρ(t) = ρ·exp[−iΦ(t)]. The
//! commutator of the integrated Hamiltonian with H(t) is a c-number, so the
//! propagator collapses to a global phase times a displacement operator:
//!
//! U(t) = exp[iφ(t)]·D(β(t)),  β = iσ*,  φ(t) = ∫₀ᵗ Im{σ(t′)ρ*(t′)}dt′,
//!
//! with σ(t) = ρ∫₀ᵗ exp[−iΦ]dt′. Lab-frame amplitudes follow by the
//! rephasing c_n = b_n·exp[−inΦ(t)].

pub mod special;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::quad::{self, exp_phase_grid};
use crate::model::{DriveWaveform, Frame, LatticeState, ProfileKind, SimulationConfig};

pub use special::{bessel_j, laguerre_assoc, laguerre_assoc_scaled, ln_factorial};

/// Sites kept free above the initial support so the displaced state fits.
pub const HEADROOM: usize = 20;
/// Columns whose initial amplitude is below this are dropped from the sum.
pub const TAIL_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplacementPropagator {
    pub t: f64,
    pub sigma: Complex64,
    /// β(t) = iσ*(t).
    pub beta: Complex64,
    /// Global phase φ(t); the propagator is exp[iφ]·D(β).
    pub phi_global: f64,
}

impl DisplacementPropagator {
    pub fn identity() -> Self {
        Self {
            t: 0.0,
            sigma: Complex64::new(0.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
            phi_global: 0.0,
        }
    }

    fn from_sigma(t: f64, sigma: Complex64, phi_global: f64) -> Self {
        Self {
            t,
            sigma,
            beta: Complex64::new(0.0, 1.0) * sigma.conj(),
            phi_global,
        }
    }
}

/// Integrates σ and φ over [a, b] starting from σ(a) = `sigma_a`.
/// Returns (σ(b), φ(b) − φ(a)).
fn advance(drive: &DriveWaveform, rho: Complex64, sigma_a: Complex64, a: f64, b: f64) -> (Complex64, f64) {
    if b <= a {
        return (sigma_a, 0.0);
    }
    let len = b - a;
    let estimate = |refine: u32| -> (Complex64, f64) {
        let grid = exp_phase_grid(drive, a, b, refine);
        let mut dphi = 0.0;
        for seg in &grid {
            // Im{σ(t)·ρ*(t)} at the nodes
            let g: Vec<f64> = seg
                .cumulative
                .iter()
                .zip(&seg.exp_phase)
                .map(|(cum, e)| ((sigma_a + rho * cum) * (rho * e).conj()).im)
                .collect();
            for (pair, x) in g.windows(3).step_by(2).zip(seg.nodes.windows(3).step_by(2)) {
                dphi += (x[2] - x[0]) / 6.0 * (pair[0] + 4.0 * pair[1] + pair[2]);
            }
        }
        let cum = *grid.last().unwrap().cumulative.last().unwrap();
        (sigma_a + rho * cum, dphi)
    };

    let r = rho.norm();
    let sigma_scale = (sigma_a.norm() + r * len).max(f64::MIN_POSITIVE);
    let phi_scale = r * len * sigma_scale;
    let mut prev = estimate(0);
    for refine in 1..=quad::MAX_REFINE {
        let next = estimate(refine);
        let ds = (next.0 - prev.0).norm();
        let dp = (next.1 - prev.1).abs();
        if ds <= quad::REFINE_TOL * sigma_scale && dp <= quad::REFINE_TOL * phi_scale.max(next.1.abs()) {
            return next;
        }
        prev = next;
    }
    log::warn!("sigma/phase quadrature on [{a}, {b}] did not reach tolerance");
    prev
}

/// σ(t), β(t) and the global phase φ(t) for coupling scale ρ.
pub fn sigma_and_phase(drive: &DriveWaveform, rho: Complex64, t: f64) -> DisplacementPropagator {
    if t <= 0.0 {
        return DisplacementPropagator::identity();
    }
    let (sigma, phi) = advance(drive, rho, Complex64::new(0.0, 0.0), 0.0, t);
    DisplacementPropagator::from_sigma(t, sigma, phi)
}

/// Propagator data at each of the nondecreasing `times`, accumulated
/// interval by interval.
pub fn propagator_series(drive: &DriveWaveform, rho: Complex64, times: &[f64]) -> Result<Vec<DisplacementPropagator>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|t| *t < 0.0) {
        return Err(Error::InvalidConfig("times must be nonnegative and nondecreasing".into()));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut sigma = Complex64::new(0.0, 0.0);
    let mut phi = 0.0;
    let mut t_prev = 0.0;
    for &t in times {
        let (s, dphi) = advance(drive, rho, sigma, t_prev, t);
        sigma = s;
        phi += dphi;
        t_prev = t;
        out.push(DisplacementPropagator::from_sigma(t, sigma, phi));
    }
    Ok(out)
}

/// ⟨n|exp(βâ† − β*â)|m⟩, evaluated with log-domain factorial ratios.
pub fn displacement_matrix_element(n: usize, m: usize, beta: Complex64) -> Complex64 {
    let x = beta.norm_sqr();
    if x == 0.0 {
        return if n == m { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
    }
    let r = x.sqrt();
    // n ≥ m: β^{n−m}·L_m^{(n−m)}; n < m: (−β*)^{m−n}·L_n^{(m−n)}
    let (lo, hi, unit) = if n >= m {
        (m, n, beta / r)
    } else {
        (n, m, -beta.conj() / r)
    };
    let k = hi - lo;
    let (mantissa, log_scale) = laguerre_assoc_scaled(lo, k, x);
    if mantissa == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let log_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi)) + k as f64 * r.ln() - 0.5 * x + log_scale;
    let magnitude = log_mag.exp() * mantissa;
    unit.powu(k as u32) * magnitude
}

fn check_headroom(initial: &LatticeState) -> Result<()> {
    let max_site = initial.amplitudes.len().saturating_sub(1);
    let limit = max_site.checked_sub(HEADROOM);
    match (initial.support_top(), limit) {
        (None, _) => Ok(()),
        (Some(top), Some(limit)) if top <= limit => Ok(()),
        (Some(top), limit) => Err(Error::Headroom {
            occupied: top,
            limit: limit.unwrap_or(0),
        }),
    }
}

/// Applies exp[iφ]·D(β) to gauge-frame amplitudes. The result keeps the
/// input's lattice size.
pub fn apply_propagator(initial: &LatticeState, prop: &DisplacementPropagator) -> Result<LatticeState> {
    check_headroom(initial)?;
    let len = initial.amplitudes.len();
    let global = Complex64::cis(prop.phi_global);
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (m, bm) in initial.amplitudes.iter().enumerate() {
        if bm.norm() < TAIL_CUTOFF {
            continue;
        }
        for (n, slot) in out.iter_mut().enumerate() {
            *slot += displacement_matrix_element(n, m, prop.beta) * bm;
        }
    }
    for v in &mut out {
        *v *= global;
    }
    Ok(LatticeState::new(out, initial.time + prop.t, Frame::Gauge))
}

/// b_n(t) from gauge-frame amplitudes b_n(0) (equal to c_n(0) since Φ(0) = 0).
pub fn exact_state(initial: &LatticeState, drive: &DriveWaveform, rho: Complex64, t: f64) -> Result<LatticeState> {
    check_headroom(initial)?;
    let prop = sigma_and_phase(drive, rho, t);
    apply_propagator(initial, &prop)
}

/// Largest |β(t)| on a grid of `samples` + 1 points over [0, t_end].
pub fn max_displacement(drive: &DriveWaveform, rho: Complex64, t_end: f64, samples: usize) -> Result<f64> {
    let samples = samples.max(1);
    let times: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples as f64).collect();
    Ok(propagator_series(drive, rho, &times)?
        .iter()
        .fold(0.0, |m, p| m.max(p.beta.norm())))
}

/// Smallest site count N for which the displaced column |m⟩ → D(β)|m⟩
/// keeps weight below `tail` on sites above N − `guard`, for every
/// |β| ≤ `beta_max` and m ≤ `top`.
pub fn required_max_site(top: usize, beta_max: f64, guard: usize, tail: f64) -> usize {
    let beta = Complex64::new(beta_max, 0.0);
    let x = beta_max * beta_max;
    (0..=top)
        .map(|m| {
            // the column is negligible well past (√m + |β|)²
            let reach = (m as f64).sqrt() + beta_max;
            let window = (reach * reach + 12.0 * reach + 60.0 + x) as usize;
            let weights: Vec<f64> = (0..=window)
                .map(|n| displacement_matrix_element(n, m, beta).norm_sqr())
                .collect();
            // suffix sums from the top avoid cancellation against 1
            let mut suffix = 0.0;
            let mut first_kept = weights.len();
            for (n, w) in weights.iter().enumerate().rev() {
                suffix += w;
                if suffix >= tail {
                    break;
                }
                first_kept = n;
            }
            first_kept + guard - 1
        })
        .max()
        .unwrap_or(guard)
}

/// Closed-form states at each of `times` for a Glauber-Fock configuration,
/// expressed in the configuration's frame.
pub fn exact_trajectory(config: &SimulationConfig, times: &[f64]) -> Result<Vec<LatticeState>> {
    if config.profile.kind != ProfileKind::GlauberFock {
        return Err(Error::InvalidConfig(
            "the closed-form propagator exists only for the Glauber-Fock profile".into(),
        ));
    }
    let mut initial = config.initial_state()?;
    initial.frame = Frame::Gauge;
    check_headroom(&initial)?;
    let props = propagator_series(&config.drive, config.profile.rho, times)?;
    props
        .iter()
        .map(|p| {
            let b = apply_propagator(&initial, p)?;
            Ok(b.to_frame(config.frame, &config.drive))
        })
        .collect()
}
