//! Floquet quasienergies of the periodically driven chain and the static
//! Wannier-Stark spectrum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::model::{DriveWaveform, Frame, HoppingProfile, Integrator};
use crate::propagate::{build_action, Stepper, Warning, LEAKAGE_SITES, LEAKAGE_THRESHOLD};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Coarsest resolution accepted for the one-period propagator.
pub const MIN_STEPS_PER_PERIOD: usize = 4000;
/// Largest tolerated max|U†U − I|.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;
/// Largest tolerated eigenpair residual, absolute for U and relative to ‖H‖
/// for the static spectrum.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// A level is converged when the spectrum of a lattice this many sites
/// longer has a level within `CONVERGENCE_TOLERANCE` of it (in units of ω
/// or ‖H‖).
pub const CONVERGENCE_PADDING: usize = 10;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyOptions {
    /// Overrides the drive's own period; required for aperiodic drives.
    pub period: Option<f64>,
    pub steps_per_period: usize,
    pub integrator: Integrator,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            period: None,
            steps_per_period: MIN_STEPS_PER_PERIOD,
            integrator: Integrator::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnWarning {
    pub column: usize,
    pub warning: Warning,
}

/// One-period lab-frame propagator U(T) of the truncated chain.
#[derive(Debug, Clone)]
pub struct MonodromyMatrix {
    pub matrix: DMatrix<Complex64>,
    pub period: f64,
    pub dt: f64,
    pub profile: HoppingProfile,
    pub drive: DriveWaveform,
    /// First leakage event of every column that reached the top sites.
    pub warnings: Vec<ColumnWarning>,
}

impl MonodromyMatrix {
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect(&self.matrix)
    }
}

/// max|U†U − I| over all entries.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for ((i, j), g) in gram.iter().enumerate().map(|(k, g)| ((k % u.ncols(), k / u.ncols()), g)) {
        let target = if i == j { 1.0 } else { 0.0 };
        worst = worst.max((g - target).norm());
    }
    worst
}

/// Evolves every basis state over one period.
///
/// Integration runs in the gauge frame, where the bonds carry the drive,
/// and the result is rephased to the lab frame with exp[−inΦ(T)].
pub fn monodromy(profile: &HoppingProfile, drive: &DriveWaveform, options: MonodromyOptions) -> Result<MonodromyMatrix> {
    let period = match options.period.or_else(|| drive.period()) {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(Error::InvalidConfig(format!("period must be positive, got {t}"))),
        None => return Err(Error::NotPeriodic("monodromy needs a period".into())),
    };
    if options.steps_per_period < MIN_STEPS_PER_PERIOD {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_STEPS_PER_PERIOD} steps per period are required, got {}",
            options.steps_per_period
        )));
    }
    let n = profile.len();
    let steps = options.steps_per_period;
    let dt = period / steps as f64;
    let checkpoint = (steps / 10).max(1);

    let mut columns = vec![ZERO; n * n];
    for j in 0..n {
        columns[j * n + j] = Complex64::new(1.0, 0.0);
    }
    let threads = rayon::current_num_threads().max(1);
    let block = n.div_ceil(threads).max(1);
    let warnings: Vec<ColumnWarning> = columns
        .par_chunks_mut(n * block)
        .enumerate()
        .map(|(b, chunk)| -> Result<Vec<ColumnWarning>> {
            let mut scratch = vec![ZERO; n];
            let mut flagged = vec![false; chunk.len() / n];
            let mut found = Vec::new();
            for k in 0..steps {
                let action = build_action(profile, drive, Frame::Gauge, (k as f64 + 0.5) * dt);
                let stepper = Stepper::new(&action, dt, options.integrator)?;
                for col in chunk.chunks_mut(n) {
                    stepper.apply(col, &mut scratch);
                }
                if (k + 1) % checkpoint == 0 && n >= 2 * LEAKAGE_SITES {
                    for (c, col) in chunk.chunks(n).enumerate() {
                        let weight: f64 = col[n - LEAKAGE_SITES..].iter().map(|z| z.norm_sqr()).sum();
                        if !flagged[c] && weight > LEAKAGE_THRESHOLD {
                            flagged[c] = true;
                            found.push(ColumnWarning {
                                column: b * block + c,
                                warning: Warning::Leakage {
                                    time: (k + 1) as f64 * dt,
                                    weight,
                                },
                            });
                        }
                    }
                }
            }
            Ok(found)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let phi = drive.phase(period);
    let mut matrix = DMatrix::from_column_slice(n, n, &columns);
    for (row, mut r) in matrix.row_iter_mut().enumerate() {
        r *= Complex64::cis(-(row as f64) * phi);
    }
    Ok(MonodromyMatrix {
        matrix,
        period,
        dt,
        profile: profile.clone(),
        drive: drive.clone(),
        warnings,
    })
}

/// Quasienergies ε with exp(−iεT) the eigenvalues of U(T), folded into
/// (−ω/2, ω/2] and sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuasienergySpectrum {
    pub values: Vec<f64>,
    /// Eigenvalue moduli, aligned with `values`.
    pub moduli: Vec<f64>,
    pub converged: Vec<bool>,
    pub period: f64,
    pub omega: f64,
    pub warnings: Vec<ColumnWarning>,
}

impl QuasienergySpectrum {
    /// Width of the smallest arc of the quasienergy circle holding every
    /// selected level. `None` when nothing is selected.
    pub fn spread(&self, converged_only: bool) -> Option<f64> {
        let picked: Vec<f64> = self
            .values
            .iter()
            .zip(&self.converged)
            .filter(|(_, c)| !converged_only || **c)
            .map(|(v, _)| *v)
            .collect();
        circular_spread(&picked, self.omega)
    }

    pub fn converged_count(&self) -> usize {
        self.converged.iter().filter(|c| **c).count()
    }

    /// Flags every level lying within `CONVERGENCE_TOLERANCE·ω` of some
    /// level of `reference` (measured around the circle).
    pub fn flag_against(&mut self, reference: &QuasienergySpectrum) {
        let tol = CONVERGENCE_TOLERANCE * self.omega;
        for (v, flag) in self.values.iter().zip(self.converged.iter_mut()) {
            *flag = reference
                .values
                .iter()
                .any(|r| circular_distance(*v, *r, self.omega) <= tol);
        }
    }
}

fn circular_distance(a: f64, b: f64, omega: f64) -> f64 {
    let d = (a - b).rem_euclid(omega);
    d.min(omega - d)
}

/// ω minus the largest gap between neighbours on the circle of
/// circumference ω.
pub fn circular_spread(values: &[f64], omega: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.rem_euclid(omega)).collect();
    v.sort_by(f64::total_cmp);
    let mut largest = v[0] + omega - v[v.len() - 1];
    for w in v.windows(2) {
        largest = largest.max(w[1] - w[0]);
    }
    Some((omega - largest).max(0.0))
}

fn fold(eps: f64, omega: f64) -> f64 {
    // into (−ω/2, ω/2]
    let mut e = (eps + 0.5 * omega).rem_euclid(omega) - 0.5 * omega;
    if e <= -0.5 * omega {
        e += omega;
    }
    e
}

/// Quasienergies of a one-period propagator.
pub fn quasienergies(u: &MonodromyMatrix) -> Result<QuasienergySpectrum> {
    let mut spectrum = quasienergies_of(&u.matrix, u.period)?;
    spectrum.warnings = u.warnings.clone();
    Ok(spectrum)
}

/// Quasienergies of a unitary `u` taken as the propagator over `period`.
pub fn quasienergies_of(u: &DMatrix<Complex64>, period: f64) -> Result<QuasienergySpectrum> {
    if !u.is_square() {
        return Err(Error::InvalidConfig("monodromy matrix must be square".into()));
    }
    let defect = unitarity_defect(u);
    if defect.is_nan() || defect > UNITARITY_TOLERANCE {
        return Err(Error::NotUnitary {
            deviation: defect,
            tolerance: UNITARITY_TOLERANCE,
        });
    }
    let n = u.nrows();
    let omega = 2.0 * PI / period;
    let vectors = unitary_eigenvectors(u);
    let mut levels = Vec::with_capacity(n);
    for v in vectors.column_iter() {
        let uv = u * v;
        let lambda = v.dotc(&uv);
        let residual = (uv - v * lambda).norm();
        if residual > RESIDUAL_TOLERANCE {
            return Err(Error::Numerical(format!(
                "eigenpair residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:e}"
            )));
        }
        levels.push((fold(-lambda.arg() / period, omega), lambda.norm()));
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(QuasienergySpectrum {
        values: levels.iter().map(|l| l.0).collect(),
        moduli: levels.iter().map(|l| l.1).collect(),
        converged: vec![false; n],
        period,
        omega,
        warnings: Vec::new(),
    })
}

/// Orthonormal eigenvectors of a unitary matrix, as columns.
///
/// Diagonalizes the Hermitian part of e^{iα}U; levels whose cosines
/// coincide are then separated by the anti-Hermitian part restricted to
/// their cluster.
fn unitary_eigenvectors(u: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    const CLUSTER_GAP: f64 = 1e-6;
    // any angle works unless eigenphases pair up symmetrically about it
    let rot = Complex64::cis(0.618_033_988_749_895);
    let hermitian = |m: &DMatrix<Complex64>| (m * rot + m.adjoint() * rot.conj()) * Complex64::new(0.5, 0.0);
    let skew = |m: &DMatrix<Complex64>| (m * rot - m.adjoint() * rot.conj()) * Complex64::new(0.0, -0.5);

    let eig = hermitian(u).symmetric_eigen();
    let mut order: Vec<usize> = (0..u.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < CLUSTER_GAP {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).into_owned();
            let compressed = block.adjoint() * u * &block;
            let rotation = skew(&compressed).symmetric_eigen().eigenvectors;
            vectors.columns_mut(start, end - start).copy_from(&(block * rotation));
        }
        start = end;
    }
    vectors
}

/// Quasienergies of `profile` under `drive`, with convergence flags from a
/// second lattice `CONVERGENCE_PADDING` sites longer.
pub fn floquet_spectrum(
    profile: &HoppingProfile,
    drive: &DriveWaveform,
    options: MonodromyOptions,
) -> Result<QuasienergySpectrum> {
    let longer = profile.with_max_site(profile.max_site + CONVERGENCE_PADDING)?;
    let mut spectrum = quasienergies(&monodromy(profile, drive, options)?)?;
    let reference = quasienergies(&monodromy(&longer, drive, options)?)?;
    spectrum.flag_against(&reference);
    Ok(spectrum)
}

/// Eigenvalues of the static chain under a constant force.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarkSpectrum {
    pub values: Vec<f64>,
    pub converged: Vec<bool>,
    /// Maximum absolute row sum of H.
    pub norm: f64,
}

impl StarkSpectrum {
    pub fn spacings(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Length of the longest run of consecutive spacings between converged
    /// levels that equal `target` within `tol`.
    pub fn longest_uniform_run(&self, target: f64, tol: f64) -> usize {
        let mut best = 0;
        let mut run = 0;
        for (j, s) in self.spacings().iter().enumerate() {
            let ok = self.converged[j] && self.converged[j + 1] && (s - target).abs() <= tol;
            run = if ok { run + 1 } else { 0 };
            best = best.max(run);
        }
        best
    }
}

fn stark_levels(profile: &HoppingProfile, f0: f64) -> Result<(Vec<f64>, f64)> {
    let n = profile.len();
    let diag: Vec<f64> = (0..n).map(|k| k as f64 * f0).collect();
    // the phase of ρ is a gauge: only bond magnitudes enter the spectrum
    let off: Vec<f64> = profile.bonds().iter().map(|k| -k).collect();
    let norm = (0..n)
        .map(|i| {
            let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { off[i].abs() } else { 0.0 };
            diag[i].abs() + left + right
        })
        .fold(0.0, f64::max);
    let eig = symmetric_tridiagonal_eigen(&diag, &off, true)?;
    let vectors = eig.vectors.as_ref().expect("vectors requested");
    let scale = norm.max(f64::MIN_POSITIVE);
    for (value, v) in eig.values.iter().zip(vectors) {
        let mut residual = 0.0f64;
        for i in 0..n {
            let mut hv = diag[i] * v[i];
            if i > 0 {
                hv += off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                hv += off[i] * v[i + 1];
            }
            residual += (hv - value * v[i]).powi(2);
        }
        if residual.sqrt() > RESIDUAL_TOLERANCE * scale {
            return Err(Error::Numerical(format!(
                "Stark eigenpair residual {:.3e} exceeds tolerance",
                residual.sqrt()
            )));
        }
    }
    Ok((eig.values, norm))
}

/// Wannier-Stark spectrum: eigenvalues of the tridiagonal H with diagonal
/// n·F0 and bonds −κ_{n+1}, flagged against a lattice
/// `CONVERGENCE_PADDING` sites longer.
pub fn stark_spectrum(profile: &HoppingProfile, f0: f64) -> Result<StarkSpectrum> {
    if !(f0.is_finite() && f0 >= 0.0) {
        return Err(Error::InvalidDrive(format!("static force must be nonnegative, got {f0}")));
    }
    let (values, norm) = stark_levels(profile, f0)?;
    let longer = profile.with_max_site(profile.max_site + CONVERGENCE_PADDING)?;
    let (reference, _) = stark_levels(&longer, f0)?;
    let tol = CONVERGENCE_TOLERANCE * norm;
    let converged = values
        .iter()
        .map(|v| {
            let idx = reference.partition_point(|r| r < v);
            [idx.saturating_sub(1), idx.min(reference.len() - 1)]
                .iter()
                .any(|&i| (reference[i] - v).abs() <= tol)
        })
        .collect();
    Ok(StarkSpectrum {
        values,
        converged,
        norm,
    })
}
