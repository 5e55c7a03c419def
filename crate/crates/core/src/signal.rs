//! Boundary-condition time series.
//!
//! Samples are dimensionless (`t*`, value). Each native sample stands for the
//! interval up to the next one, so a series of `n` uniformly spaced samples
//! covers a duration of `n·Δ` for averaging purposes.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::units::{QuantityKind, ReferenceScales};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    #[default]
    Linear,
    /// Left-hold: the value of the last sample at or before `t`.
    PiecewiseConstant,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySignal {
    times: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

impl BoundarySignal {
    pub fn new(times: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid(format!(
                "{} sample times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::invalid("fewer than 2 samples"));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal contains non-finite samples"));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("non-monotone time at sample {}", i + 1)));
        }
        Ok(Self {
            times,
            values,
            interpolation,
        })
    }

    /// Constant value on `[start, end]`.
    pub fn constant(value: f64, start: f64, end: f64) -> Result<Self> {
        Self::new(vec![start, end], vec![value, value], Interpolation::Linear)
    }

    /// Uniformly spaced samples starting at `t = 0`.
    pub fn uniform(spacing: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64 * spacing).collect();
        Self::new(times, values, Interpolation::Linear)
    }

    /// Samples `f` at `0, spacing, 2·spacing, …, count−1`.
    pub fn from_fn(spacing: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..count).map(|i| f(i as f64 * spacing)).collect();
        Self::uniform(spacing, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn with_interpolation(mut self, interpolation: Interpolation) -> Self {
        self.interpolation = interpolation;
        self
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Native spacing if the samples are uniform to within 1e-9 relative.
    pub fn spacing(&self) -> Option<f64> {
        let h = self.times[1] - self.times[0];
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(1.0));
        uniform.then_some(h)
    }

    /// Index of the segment `[t_i, t_{i+1}]` containing `t` (checked by caller).
    fn segment(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&s| s <= t);
        i.saturating_sub(1).min(self.times.len() - 2)
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let tol = 1e-9 * self.end().abs().max(1.0);
        if t < self.start() - tol || t > self.end() + tol || t.is_nan() {
            return Err(Error::OutOfRange {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(())
    }

    pub fn sample(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        let i = self.segment(t);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        Ok(match self.interpolation {
            Interpolation::Linear => {
                let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                v0 + w * (v1 - v0)
            }
            Interpolation::PiecewiseConstant => {
                if t >= t1 {
                    v1
                } else {
                    v0
                }
            }
        })
    }

    /// Time derivative of the interpolant, taken from the forward segment at `t`.
    pub fn slope(&self, t: f64) -> Result<f64> {
        self.check_range(t)?;
        match self.interpolation {
            Interpolation::PiecewiseConstant => Ok(0.0),
            Interpolation::Linear => {
                let i = self.segment(t);
                Ok((self.values[i + 1] - self.values[i]) / (self.times[i + 1] - self.times[i]))
            }
        }
    }

    /// `a·s + b`, sample by sample.
    pub fn map_affine(&self, a: f64, b: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| a * v + b).collect(),
            interpolation: self.interpolation,
        }
    }

    /// Sample-weighted mean over all samples.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Unit of the `value` column of a boundary CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueUnit {
    Celsius,
    Kelvin,
    /// Volumetric moisture content θ.
    Moisture,
    /// Heat flux in W/m².
    WattPerSquareMetre,
    /// Already dimensionless.
    Dimensionless,
}

impl ValueUnit {
    pub fn to_dimensionless(self, value: f64, scales: &ReferenceScales) -> f64 {
        match self {
            ValueUnit::Celsius => scales.nondimensionalize(value + 273.15, QuantityKind::Temperature),
            ValueUnit::Kelvin => scales.nondimensionalize(value, QuantityKind::Temperature),
            ValueUnit::Moisture => scales.nondimensionalize(value, QuantityKind::Moisture),
            ValueUnit::WattPerSquareMetre => scales.nondimensionalize(value, QuantityKind::Flux),
            ValueUnit::Dimensionless => value,
        }
    }

    pub fn from_dimensionless(self, value: f64, scales: &ReferenceScales) -> f64 {
        match self {
            ValueUnit::Celsius => scales.redimensionalize(value, QuantityKind::Temperature) - 273.15,
            ValueUnit::Kelvin => scales.redimensionalize(value, QuantityKind::Temperature),
            ValueUnit::Moisture => scales.redimensionalize(value, QuantityKind::Moisture),
            ValueUnit::WattPerSquareMetre => scales.redimensionalize(value, QuantityKind::Flux),
            ValueUnit::Dimensionless => value,
        }
    }
}

/// Reads a `time_hours,value` CSV and converts it to dimensionless samples.
pub fn load_series(path: &Path, unit: ValueUnit, scales: &ReferenceScales) -> Result<BoundarySignal> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "time_hours" || &headers[1] != "value" {
        return Err(parse_err(1, "expected header `time_hours,value`".into()));
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, format!("malformed row: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(parse_err(line, format!("malformed row: expected 2 fields, got {}", record.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            let v: f64 = s
                .parse()
                .map_err(|_| parse_err(line, format!("malformed row: `{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("malformed row: `{s}` is not finite")))
            }
        };
        let hours = parse(&record[0])?;
        let value = parse(&record[1])?;
        if let Some(&prev) = times.last() {
            let t = hours * 3600.0 / scales.t_ref;
            if t <= prev {
                return Err(parse_err(line, "non-monotone time".into()));
            }
        }
        times.push(hours * 3600.0 / scales.t_ref);
        values.push(unit.to_dimensionless(value, scales));
    }
    if times.is_empty() {
        return Err(parse_err(1, "empty file".into()));
    }
    if times.len() < 2 {
        return Err(parse_err(2, "fewer than 2 samples".into()));
    }
    BoundarySignal::new(times, values, Interpolation::Linear)
}

/// Writes a signal back out in the `time_hours,value` format.
pub fn write_series(
    path: &Path,
    signal: &BoundarySignal,
    unit: ValueUnit,
    scales: &ReferenceScales,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(["time_hours", "value"]).map_err(csv_io)?;
    for (t, v) in signal.times().iter().zip(signal.values()) {
        let hours = t * scales.hours_per_unit();
        let value = unit.from_dimensionless(*v, scales);
        w.write_record([hours.to_string(), value.to_string()]).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Averaging period τ (dimensionless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragingSpec {
    tau: f64,
}

impl AveragingSpec {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("averaging period must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// τ must be an integer multiple of the native spacing; returns that multiple.
    pub fn samples_per_window(&self, signal: &BoundarySignal) -> Result<usize> {
        let spacing = signal
            .spacing()
            .ok_or_else(|| Error::invalid("block averaging needs uniformly sampled data"))?;
        let ratio = self.tau / spacing;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "averaging period {} is not an integer multiple of the sample spacing {}",
                self.tau, spacing
            )));
        }
        Ok(m as usize)
    }
}

/// Arithmetic means of consecutive non-overlapping windows of `per_window`
/// samples, aligned to the first sample. The last window may be partial.
pub fn window_means(signal: &BoundarySignal, spec: AveragingSpec) -> Result<Vec<f64>> {
    let per_window = spec.samples_per_window(signal)?;
    if signal.values().len() < per_window {
        return Err(Error::invalid(format!(
            "signal duration is shorter than one averaging window (τ = {})",
            spec.tau()
        )));
    }
    Ok(signal
        .values()
        .chunks(per_window)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

/// Smoothed signal ū for averaging period τ.
///
/// Every window is represented by one node placed at the centroid of its
/// sample times; the output is the piecewise-linear curve through those
/// nodes (held flat beyond the first and last), sampled back at the native
/// times. Node values are solved for so that the native samples of the output
/// reproduce each window mean exactly, which makes the operator idempotent.
pub fn block_average(signal: &BoundarySignal, spec: AveragingSpec) -> Result<BoundarySignal> {
    let first = signal.values()[0];
    if signal.values().iter().all(|v| *v == first) {
        return Ok(signal.clone());
    }
    let per_window = spec.samples_per_window(signal)?;
    let means = window_means(signal, spec)?;
    let times = signal.times();
    let n_windows = means.len();

    let centroids: Vec<f64> = times
        .chunks(per_window)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();

    let hat = |k: usize, t: f64| -> f64 {
        let c = centroids[k];
        if t <= c {
            if k == 0 {
                1.0
            } else {
                let c0 = centroids[k - 1];
                ((t - c0) / (c - c0)).max(0.0)
            }
        } else if k + 1 == n_windows {
            1.0
        } else {
            let c1 = centroids[k + 1];
            ((c1 - t) / (c1 - c)).max(0.0)
        }
    };

    // Tridiagonal system: row w averages the basis over window w's samples.
    let mut sub = vec![0.0; n_windows];
    let mut diag = vec![0.0; n_windows];
    let mut sup = vec![0.0; n_windows];
    for (w, chunk) in times.chunks(per_window).enumerate() {
        let n = chunk.len() as f64;
        for &t in chunk {
            diag[w] += hat(w, t) / n;
            if w > 0 {
                sub[w] += hat(w - 1, t) / n;
            }
            if w + 1 < n_windows {
                sup[w] += hat(w + 1, t) / n;
            }
        }
    }
    let nodes = solve_tridiagonal(&sub, &diag, &sup, &means)?;

    let interpolate = |t: f64| -> f64 {
        if n_windows == 1 || t <= centroids[0] {
            return nodes[0];
        }
        if t >= centroids[n_windows - 1] {
            return nodes[n_windows - 1];
        }
        let k = centroids.partition_point(|&c| c <= t) - 1;
        let w = (t - centroids[k]) / (centroids[k + 1] - centroids[k]);
        nodes[k] + w * (nodes[k + 1] - nodes[k])
    };
    let values = times.iter().map(|&t| interpolate(t)).collect();
    BoundarySignal::new(times.to_vec(), values, Interpolation::Linear)
}

/// Thomas algorithm; the averaging matrices are strictly diagonally dominant.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::invalid("singular averaging system"));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::invalid("singular averaging system"));
        }
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Synthetic hourly boundary series: annual sinusoid + diurnal sinusoid +
/// AR(1) Gaussian noise, all in the physical unit `unit`.
///
/// `value(h) = mean + annual_amplitude·sin(2π(h/8760 − annual_phase))
///           + diurnal_amplitude·sin(2π(h/24 − diurnal_phase)) + e(h)`,
/// with `e(h) = ρ·e(h−1) + sqrt(1−ρ²)·σ·N(0,1)`, `e(0) = σ·N(0,1)`.
/// Phases are fractions of the respective period.
///
/// With `start` set, the series begins at `start` (e(0) = 0) and the initial
/// offset from the periodic part decays as `exp(−h/relaxation_hours)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthWeather {
    pub unit: ValueUnit,
    pub mean: f64,
    pub annual_amplitude: f64,
    #[serde(default)]
    pub annual_phase: f64,
    pub diurnal_amplitude: f64,
    #[serde(default)]
    pub diurnal_phase: f64,
    #[serde(default)]
    pub noise_amplitude: f64,
    #[serde(default = "SynthWeather::default_noise_correlation")]
    pub noise_correlation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default)]
    pub relaxation_hours: f64,
}

impl SynthWeather {
    fn default_noise_correlation() -> f64 {
        0.9
    }

    /// Physical-unit hourly values for hours `0..=24·days`.
    pub fn physical_hourly(&self, seed: u64, days: usize) -> Vec<f64> {
        let n = 24 * days + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = self.noise_correlation.clamp(0.0, 0.999_999);
        let innovation = (1.0 - rho * rho).sqrt();
        let tau = std::f64::consts::TAU;
        let periodic = |h: f64| {
            self.mean
                + self.annual_amplitude * (tau * (h / 8760.0 - self.annual_phase)).sin()
                + self.diurnal_amplitude * (tau * (h / 24.0 - self.diurnal_phase)).sin()
        };
        let offset = self.start.map_or(0.0, |s| s - periodic(0.0));
        let mut noise = 0.0;
        (0..n)
            .map(|k| {
                let h = k as f64;
                let z: f64 = StandardNormal.sample(&mut rng);
                noise = if k == 0 {
                    if self.start.is_some() { 0.0 } else { self.noise_amplitude * z }
                } else {
                    rho * noise + innovation * self.noise_amplitude * z
                };
                let decay = if self.relaxation_hours > 0.0 {
                    (-h / self.relaxation_hours).exp()
                } else if k == 0 {
                    1.0
                } else {
                    0.0
                };
                periodic(h) + offset * decay + noise
            })
            .collect()
    }
}

/// Deterministic synthetic hourly signal over `days` days, made dimensionless.
pub fn synth_weather(
    seed: u64,
    days: usize,
    spec: &SynthWeather,
    scales: &ReferenceScales,
) -> Result<BoundarySignal> {
    if days == 0 {
        return Err(Error::invalid("synthetic weather needs at least one day"));
    }
    let values = spec
        .physical_hourly(seed, days)
        .into_iter()
        .map(|v| spec.unit.to_dimensionless(v, scales))
        .collect();
    BoundarySignal::uniform(3600.0 / scales.t_ref, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::io::Write;

    fn scales() -> ReferenceScales {
        ReferenceScales {
            t_ref: 3600.0,
            temp_ref: 293.15,
            length_ref: 0.2,
            c_ref: 2e6,
            k_ref: 1.13,
            moisture_ref: 1.0,
            d_theta_ref: 1.0,
        }
    }

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_two_rows() {
        let f = write_csv("time_hours,value\n0,20\n1,21\n");
        let s = load_series(f.path(), ValueUnit::Celsius, &scales()).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0]);
        assert_relative_eq!(s.values()[0], 293.15 / 293.15, max_relative = 1e-15);
        assert_relative_eq!(s.values()[1], 294.15 / 293.15, max_relative = 1e-15);
    }

    #[test]
    fn load_errors_carry_line_numbers() {
        let f = write_csv("time_hours,value\n0,20\n");
        let err = load_series(f.path(), ValueUnit::Celsius, &scales()).unwrap_err();
        assert!(err.to_string().contains("fewer than 2 samples"), "{err}");

        let f = write_csv("time_hours,value\n0,20\n2,21\n1,22\n");
        let err = load_series(f.path(), ValueUnit::Celsius, &scales()).unwrap_err();
        assert!(err.to_string().contains("non-monotone time"), "{err}");
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");

        let f = write_csv("time_hours,value\n0,20\n1,abc\n");
        let err = load_series(f.path(), ValueUnit::Celsius, &scales()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");

        let f = write_csv("time_hours,value\n");
        let err = load_series(f.path(), ValueUnit::Celsius, &scales()).unwrap_err();
        assert!(err.to_string().contains("empty file"), "{err}");

        let f = write_csv("hours,temp\n0,1\n1,2\n");
        assert!(load_series(f.path(), ValueUnit::Celsius, &scales()).is_err());
    }

    #[test]
    fn write_then_load() {
        let sig = BoundarySignal::from_fn(1.0, 5, |t| 1.0 + 0.01 * t).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_series(f.path(), &sig, ValueUnit::Kelvin, &scales()).unwrap();
        let back = load_series(f.path(), ValueUnit::Kelvin, &scales()).unwrap();
        for (a, b) in back.values().iter().zip(sig.values()) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
    }

    #[test]
    fn sampling_modes() {
        let s = BoundarySignal::new(vec![0.0, 1.0], vec![1.0, 3.0], Interpolation::Linear).unwrap();
        assert_eq!(s.sample(0.0).unwrap(), 1.0);
        assert_eq!(s.sample(1.0).unwrap(), 3.0);
        assert_eq!(s.sample(0.5).unwrap(), 2.0);
        assert_eq!(s.slope(0.3).unwrap(), 2.0);
        let s = s.with_interpolation(Interpolation::PiecewiseConstant);
        assert_eq!(s.sample(0.7).unwrap(), 1.0);
        assert_eq!(s.sample(1.0).unwrap(), 3.0);
        assert!(matches!(s.sample(1.5), Err(Error::OutOfRange { .. })));
        assert!(s.sample(-0.1).is_err());
    }

    #[test]
    fn constructor_invariants() {
        assert!(BoundarySignal::new(vec![0.0], vec![1.0], Interpolation::Linear).is_err());
        assert!(BoundarySignal::new(vec![0.0, 0.0], vec![1.0, 1.0], Interpolation::Linear).is_err());
        assert!(BoundarySignal::new(vec![0.0, 1.0], vec![1.0], Interpolation::Linear).is_err());
    }

    #[test]
    fn average_of_constant_is_constant() {
        let s = BoundarySignal::from_fn(1.0, 100, |_| 4.2).unwrap();
        for tau in [1.0, 6.0, 24.0, 48.0] {
            let a = block_average(&s, AveragingSpec::new(tau).unwrap()).unwrap();
            assert!(a.values().iter().all(|v| (v - 4.2).abs() < 1e-14));
        }
    }

    #[test]
    fn sinusoid_averages_to_zero() {
        let tau = 24.0;
        let s = BoundarySignal::from_fn(1.0, 24 * 10, |t| (std::f64::consts::TAU * t / tau).sin()).unwrap();
        let means = window_means(&s, AveragingSpec::new(tau).unwrap()).unwrap();
        assert_eq!(means.len(), 10);
        assert!(means.iter().all(|m| m.abs() < 1e-3));
    }

    #[test]
    fn ramp_window_mean() {
        let s = BoundarySignal::from_fn(1.0, 24, |t| t).unwrap();
        let means = window_means(&s, AveragingSpec::new(24.0).unwrap()).unwrap();
        // direct summation: (0 + 1 + ... + 23) / 24
        let oracle = (0..24).map(|i| i as f64).sum::<f64>() / 24.0;
        assert_eq!(means, vec![oracle]);
        assert_eq!(oracle, 11.5);
        let avg = block_average(&s, AveragingSpec::new(24.0).unwrap()).unwrap();
        assert!(avg.values().iter().all(|v| (v - 11.5).abs() < 1e-12));
    }

    #[test]
    fn averaging_rejects_bad_periods() {
        let s = BoundarySignal::from_fn(1.0, 10, |t| t).unwrap();
        assert!(block_average(&s, AveragingSpec::new(24.0).unwrap()).is_err());
        assert!(block_average(&s, AveragingSpec::new(2.5).unwrap()).is_err());
        assert!(AveragingSpec::new(0.0).is_err());
        let irregular = BoundarySignal::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, 0.0], Interpolation::Linear).unwrap();
        assert!(block_average(&irregular, AveragingSpec::new(1.0).unwrap()).is_err());
    }

    #[test]
    fn trailing_partial_window_uses_its_own_length() {
        let s = BoundarySignal::from_fn(1.0, 30, |t| t).unwrap();
        let means = window_means(&s, AveragingSpec::new(24.0).unwrap()).unwrap();
        assert_eq!(means.len(), 2);
        assert_eq!(means[1], (24..30).map(|i| i as f64).sum::<f64>() / 6.0);
    }

    #[test]
    fn native_period_is_identity() {
        let s = BoundarySignal::from_fn(1.0, 50, |t| (0.3 * t).sin() + 0.01 * t * t).unwrap();
        let a = block_average(&s, AveragingSpec::new(1.0).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(s.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_weather_is_deterministic() {
        let spec = SynthWeather {
            unit: ValueUnit::Celsius,
            mean: 12.0,
            annual_amplitude: 8.0,
            annual_phase: 0.3,
            diurnal_amplitude: 5.0,
            diurnal_phase: 0.1,
            noise_amplitude: 1.0,
            noise_correlation: 0.9,
            start: None,
            relaxation_hours: 0.0,
        };
        let a = synth_weather(7, 3, &spec, &scales()).unwrap();
        let b = synth_weather(7, 3, &spec, &scales()).unwrap();
        assert_eq!(a, b);
        let c = synth_weather(8, 3, &spec, &scales()).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.values().len(), 73);
        assert!(synth_weather(7, 0, &spec, &scales()).is_err());
    }

    #[test]
    fn noiseless_weather_is_diurnally_periodic_over_a_day() {
        let spec = SynthWeather {
            unit: ValueUnit::Celsius,
            mean: 10.0,
            annual_amplitude: 0.0,
            annual_phase: 0.0,
            diurnal_amplitude: 5.0,
            diurnal_phase: 0.25,
            noise_amplitude: 0.0,
            noise_correlation: 0.9,
            start: None,
            relaxation_hours: 0.0,
        };
        let v = spec.physical_hourly(1, 4);
        for k in 0..(v.len() - 24) {
            assert!((v[k] - v[k + 24]).abs() < 1e-9);
        }
    }

    #[test]
    fn start_value_relaxes_onto_the_periodic_part() {
        let spec = SynthWeather {
            unit: ValueUnit::Moisture,
            mean: 0.35,
            annual_amplitude: 0.0,
            annual_phase: 0.0,
            diurnal_amplitude: 0.0,
            diurnal_phase: 0.0,
            noise_amplitude: 0.0,
            noise_correlation: 0.9,
            start: Some(0.53),
            relaxation_hours: 100.0,
        };
        let v = spec.physical_hourly(1, 30);
        assert_eq!(v[0], 0.53);
        assert_relative_eq!(v[100], 0.35 + 0.18 * (-1.0f64).exp(), max_relative = 1e-14);
        assert!(v.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn annual_mean_matches_configuration() {
        let spec = SynthWeather {
            unit: ValueUnit::Celsius,
            mean: 12.0,
            annual_amplitude: 8.0,
            annual_phase: 0.3,
            diurnal_amplitude: 5.0,
            diurnal_phase: 0.1,
            noise_amplitude: 1.0,
            noise_correlation: 0.9,
            start: None,
            relaxation_hours: 0.0,
        };
        // direct summation over exactly two years of hourly samples
        let v = spec.physical_hourly(3, 730);
        let mean = v[..730 * 24].iter().sum::<f64>() / (730 * 24) as f64;
        assert!((mean - 12.0).abs() < 0.01 * 12.0, "mean {mean}");
    }

    fn arb_signal() -> impl Strategy<Value = BoundarySignal> {
        prop::collection::vec(-10.0f64..10.0, 24..120)
            .prop_map(|v| BoundarySignal::uniform(1.0, v).unwrap())
    }

    proptest! {
        #[test]
        fn averaging_preserves_window_means_and_is_idempotent(s in arb_signal(), m in prop::sample::select(vec![1usize, 2, 3, 6, 12, 24])) {
            let spec = AveragingSpec::new(m as f64).unwrap();
            let means = window_means(&s, spec).unwrap();
            let once = block_average(&s, spec).unwrap();
            let means_once = window_means(&once, spec).unwrap();
            for (a, b) in means.iter().zip(&means_once) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let twice = block_average(&once, spec).unwrap();
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn averaging_commutes_with_affine_maps(s in arb_signal(), a in -3.0f64..3.0, b in -5.0f64..5.0) {
            let spec = AveragingSpec::new(6.0).unwrap();
            let lhs = block_average(&s.map_affine(a, b), spec).unwrap();
            let rhs = block_average(&s, spec).unwrap().map_affine(a, b);
            for (x, y) in lhs.values().iter().zip(rhs.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
