//! Composite Simpson quadrature of exp[−iΦ(t)] with cumulative output.
//!
//! The interval is split at the drive's breakpoints so that every panel
//! sees a smooth integrand. Each panel is integrated with Simpson's rule
//! on its endpoints and midpoint, which gives the running integral at
//! every node.

use num_complex::Complex64;

use super::drive::DriveWaveform;

/// Simpson panels per resolution scale (period, or 2π/|F0| for dc).
pub(crate) const PANELS_PER_SCALE: f64 = 4096.0;
/// Refinement stops once successive estimates differ by less than this,
/// relative to max(|I|, b − a).
pub(crate) const REFINE_TOL: f64 = 1e-12;
pub(crate) const MAX_REFINE: u32 = 10;

pub(crate) struct GridSegment {
    pub nodes: Vec<f64>,
    /// exp[−iΦ] at each node.
    pub exp_phase: Vec<Complex64>,
    /// ∫ₐ^{node} exp[−iΦ] measured from the start of the whole interval.
    pub cumulative: Vec<Complex64>,
}

#[inline]
pub(crate) fn exp_phase(drive: &DriveWaveform, t: f64) -> Complex64 {
    Complex64::cis(-drive.phase(t))
}

fn base_panels(drive: &DriveWaveform, len: f64) -> usize {
    let n = match drive.resolution_scale() {
        None => 2,
        Some(scale) => (PANELS_PER_SCALE * len / scale).ceil() as usize,
    };
    let n = n.max(2);
    n + n % 2
}

/// Builds the cumulative grid on [a, b] with `2^refine` times the base
/// panel density. Every segment holds an even number of panels.
pub(crate) fn exp_phase_grid(drive: &DriveWaveform, a: f64, b: f64, refine: u32) -> Vec<GridSegment> {
    let mut edges = vec![a];
    edges.extend(drive.breakpoints(a, b));
    edges.push(b);

    let mut acc = Complex64::new(0.0, 0.0);
    let mut segments = Vec::with_capacity(edges.len() - 1);
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let panels = base_panels(drive, hi - lo) << refine;
        let h = (hi - lo) / panels as f64;
        let mut nodes = Vec::with_capacity(panels + 1);
        let mut exp_phase_vals = Vec::with_capacity(panels + 1);
        let mut cumulative = Vec::with_capacity(panels + 1);

        let mut f_left = exp_phase(drive, lo);
        nodes.push(lo);
        exp_phase_vals.push(f_left);
        cumulative.push(acc);
        for j in 0..panels {
            let x0 = lo + j as f64 * h;
            let x1 = if j + 1 == panels { hi } else { lo + (j + 1) as f64 * h };
            let f_mid = exp_phase(drive, 0.5 * (x0 + x1));
            let f_right = exp_phase(drive, x1);
            acc += (f_left + f_mid * 4.0 + f_right) * ((x1 - x0) / 6.0);
            nodes.push(x1);
            exp_phase_vals.push(f_right);
            cumulative.push(acc);
            f_left = f_right;
        }
        segments.push(GridSegment {
            nodes,
            exp_phase: exp_phase_vals,
            cumulative,
        });
    }
    segments
}

/// ∫ₐᵇ exp[−iΦ(t)]dt with adaptive refinement.
pub(crate) fn integrate_exp_phase(drive: &DriveWaveform, a: f64, b: f64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    if drive.is_zero() {
        return Complex64::new(b - a, 0.0);
    }
    let total = |refine| {
        let grid = exp_phase_grid(drive, a, b, refine);
        *grid.last().unwrap().cumulative.last().unwrap()
    };
    let mut prev = total(0);
    for refine in 1..=MAX_REFINE {
        let next = total(refine);
        let scale = next.norm().max(b - a);
        if (next - prev).norm() <= REFINE_TOL * scale {
            return next;
        }
        prev = next;
    }
    log::warn!("exp-phase quadrature on [{a}, {b}] did not reach {REFINE_TOL:e}");
    prev
}
