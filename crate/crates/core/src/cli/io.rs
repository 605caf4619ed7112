//! CSV writers and the trajectory reader.
//!
//! Floats are written as `{:.16e}`: 17 significant digits, enough for
//! every `f64` to parse back to the same bits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{CliError, SweepPoint};
use crate::observables::{ObservableSeries, CHANNELS};
use crate::propagate::Trajectory;
use crate::spectra::{QuasienergySpectrum, StarkSpectrum};

pub const TRAJECTORY_HEADER: [&str; 5] = ["t", "n", "re", "im", "abs2"];

struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Sink {
    fn create(path: &Path) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    fn line(&mut self, fields: &[String]) -> Result<(), CliError> {
        writeln!(self.out, "{}", fields.join(",")).map_err(|e| CliError::io(&self.path, e))
    }

    fn close(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// One row per (sample, site).
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let mut sink = Sink::create(path)?;
    sink.line(&header(&TRAJECTORY_HEADER))?;
    for (t, psi) in traj.times.iter().zip(&traj.states) {
        for (n, c) in psi.iter().enumerate() {
            sink.line(&[num(*t), n.to_string(), num(c.re), num(c.im), num(c.norm_sqr())])?;
        }
    }
    sink.close()
}

pub fn write_observables(path: &Path, series: &ObservableSeries, deviation: Option<&[f64]>) -> Result<(), CliError> {
    let mut sink = Sink::create(path)?;
    let mut names = vec!["t"];
    names.extend(CHANNELS);
    if deviation.is_some() {
        names.push("deviation");
    }
    sink.line(&header(&names))?;
    for (i, t) in series.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(CHANNELS.iter().map(|c| num(series.channel(c).expect("known channel")[i])));
        if let Some(d) = deviation {
            row.push(num(d[i]));
        }
        sink.line(&row)?;
    }
    sink.close()
}

pub fn write_quasienergies(path: &Path, spectrum: &QuasienergySpectrum) -> Result<(), CliError> {
    let mut sink = Sink::create(path)?;
    sink.line(&header(&["index", "value", "converged", "modulus"]))?;
    for (i, ((v, c), m)) in spectrum
        .values
        .iter()
        .zip(&spectrum.converged)
        .zip(&spectrum.moduli)
        .enumerate()
    {
        sink.line(&[i.to_string(), num(*v), c.to_string(), num(*m)])?;
    }
    sink.close()
}

/// The spacing column holds value[i + 1] − value[i] and is empty on the
/// last row.
pub fn write_stark(path: &Path, spectrum: &StarkSpectrum) -> Result<(), CliError> {
    let mut sink = Sink::create(path)?;
    sink.line(&header(&["index", "value", "converged", "spacing"]))?;
    let spacings = spectrum.spacings();
    for (i, (v, c)) in spectrum.values.iter().zip(&spectrum.converged).enumerate() {
        let spacing = spacings.get(i).map(|s| num(*s)).unwrap_or_default();
        sink.line(&[i.to_string(), num(*v), c.to_string(), spacing])?;
    }
    sink.close()
}

pub const SWEEP_HEADER: [&str; 8] = [
    "omega_over_rho",
    "f0_over_omega",
    "revival_T",
    "min_revival",
    "self_imaging_error",
    "max_offset",
    "quasienergy_spread",
    "status",
];

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<(), CliError> {
    let mut sink = Sink::create(path)?;
    sink.line(&header(&SWEEP_HEADER))?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for p in points {
        let r = p.revival;
        sink.line(&[
            num(p.omega_over_rho),
            num(p.f0_over_omega),
            opt(r.map(|r| r.revival_t)),
            opt(r.map(|r| r.min_revival)),
            opt(r.map(|r| r.self_imaging_error)),
            opt(r.map(|r| r.max_offset)),
            opt(p.quasienergy_spread),
            csv_text(&p.status),
        ])?;
    }
    sink.close()
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Trajectory samples read back from CSV: `amplitudes[i][n]` at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryData {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl TrajectoryData {
    pub fn sites(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }

    /// |⟨ψ(0)|ψ(t)⟩|² for every sample.
    pub fn revival(&self) -> Vec<f64> {
        let Some(first) = self.amplitudes.first() else {
            return Vec::new();
        };
        self.amplitudes
            .iter()
            .map(|psi| {
                first
                    .iter()
                    .zip(psi)
                    .map(|(a, b)| a.conj() * b)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect()
    }
}

/// Parses a trajectory CSV. Errors carry the 1-based line number of the
/// offending row.
pub fn read_trajectory(path: &Path) -> Result<TrajectoryData, CliError> {
    let parse_err = |row: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        row,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let heading = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if heading.iter().map(str::trim).ne(TRAJECTORY_HEADER) {
        return Err(parse_err(
            1,
            format!("expected header {}, found {}", TRAJECTORY_HEADER.join(","), heading.iter().collect::<Vec<_>>().join(",")),
        ));
    }

    let mut data = TrajectoryData {
        times: Vec::new(),
        amplitudes: Vec::new(),
    };
    let mut record = csv::StringRecord::new();
    let mut line = 1;
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let row = e.position().map_or(line + 1, |p| p.line());
                return Err(parse_err(row, e.to_string()));
            }
        }
        line = record.position().map_or(line + 1, |p| p.line());
        if record.len() != TRAJECTORY_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", TRAJECTORY_HEADER.len(), record.len()),
            ));
        }
        let float = |i: usize| -> Result<f64, CliError> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column {}: '{}': {e}", TRAJECTORY_HEADER[i], &record[i])))
        };
        let t = float(0)?;
        let n: usize = record[1]
            .trim()
            .parse()
            .map_err(|e| parse_err(line, format!("column n: '{}': {e}", &record[1])))?;
        let c = Complex64::new(float(2)?, float(3)?);

        if n == 0 {
            if let Some(prev) = data.amplitudes.last() {
                if prev.len() != data.amplitudes[0].len() {
                    return Err(parse_err(line, format!("sample at t = {} is incomplete", data.times.last().unwrap())));
                }
                if t < *data.times.last().unwrap() {
                    return Err(parse_err(line, format!("time {t} decreases")));
                }
            }
            data.times.push(t);
            data.amplitudes.push(vec![c]);
        } else {
            let Some(current) = data.amplitudes.last_mut() else {
                return Err(parse_err(line, "first row must have n = 0".into()));
            };
            if n != current.len() {
                return Err(parse_err(line, format!("expected site {}, found {n}", current.len())));
            }
            if t != *data.times.last().unwrap() {
                return Err(parse_err(line, format!("time {t} differs from its sample's time")));
            }
            current.push(c);
        }
    }
    if data.times.is_empty() {
        return Err(parse_err(line, "no samples".into()));
    }
    if data.amplitudes.last().unwrap().len() != data.amplitudes[0].len() {
        return Err(parse_err(line, "last sample is incomplete".into()));
    }
    Ok(data)
}
