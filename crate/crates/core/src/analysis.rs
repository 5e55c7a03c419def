//! Error metrics, conduction loads, thermal resistances, measurement
//! uncertainty, distributions and CPU ratios.

use std::ops::Range;

use crate::integrate::Trajectory;
use crate::units::PropertyPolynomial;
use crate::{Error, Result};

/// Keeps only the entries in `range` of every snapshot.
pub fn select(traj: &Trajectory, range: Range<usize>) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj.states.iter().map(|s| s[range.clone()].to_vec()).collect(),
        wall_time: traj.wall_time,
        n_stages: traj.n_stages,
    }
}

/// Builds a one-component trajectory from a scalar series.
pub fn scalar_series(times: Vec<f64>, values: &[f64]) -> Trajectory {
    Trajectory {
        times,
        states: values.iter().map(|v| vec![*v]).collect(),
        wall_time: 0.0,
        n_stages: 0,
    }
}

/// Linear interpolation of `traj` at each of `times` that lies inside its
/// time range. Returns the retained target times and states.
pub fn resample(traj: &Trajectory, times: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let src = &traj.times;
    let (first, last) = (src[0], src[src.len() - 1]);
    let tol = 1e-9 * last.abs().max(1.0);
    let mut out_t = Vec::new();
    let mut out_s = Vec::new();
    for &t in times {
        if t < first - tol || t > last + tol {
            continue;
        }
        let i = src.partition_point(|&s| s <= t + tol);
        let state = if i == 0 {
            traj.states[0].clone()
        } else if (src[i - 1] - t).abs() <= tol || i == src.len() {
            traj.states[i - 1].clone()
        } else {
            let w = (t - src[i - 1]) / (src[i] - src[i - 1]);
            traj.states[i - 1]
                .iter()
                .zip(&traj.states[i])
                .map(|(a, b)| a + w * (b - a))
                .collect()
        };
        out_t.push(t);
        out_s.push(state);
    }
    if out_t.is_empty() {
        return Err(Error::invalid("trajectories have no overlapping sample times"));
    }
    Ok((out_t, out_s))
}

/// Reference states paired with test states at common times.
fn aligned(reference: &Trajectory, test: &Trajectory) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let (times, test_states) = resample(test, &reference.times)?;
    let tol = 1e-9 * reference.times.last().unwrap().abs().max(1.0);
    let mut ref_states = Vec::with_capacity(times.len());
    let mut j = 0;
    for t in &times {
        while (reference.times[j] - t).abs() > tol {
            j += 1;
        }
        ref_states.push(reference.states[j].clone());
    }
    if ref_states[0].len() != test_states[0].len() {
        return Err(Error::invalid(format!(
            "reference has {} components, test has {}",
            ref_states[0].len(),
            test_states[0].len()
        )));
    }
    Ok((ref_states, test_states))
}

/// RMS-over-time error per component and its maximum.
pub fn l2_error(reference: &Trajectory, test: &Trajectory) -> Result<(Vec<f64>, f64)> {
    let (r, s) = aligned(reference, test)?;
    let n_t = r.len() as f64;
    let n = r[0].len();
    let mut sum = vec![0.0; n];
    for (a, b) in r.iter().zip(&s) {
        for j in 0..n {
            let d = a[j] - b[j];
            sum[j] += d * d;
        }
    }
    let profile: Vec<f64> = sum.into_iter().map(|v| (v / n_t).sqrt()).collect();
    let max = profile.iter().cloned().fold(0.0, f64::max);
    Ok((profile, max))
}

/// Normalised error `η₂(x) = sqrt(mean_t((ref − test)²/Δref(x)))` with
/// `Δref` the max − min of the reference at that node.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeError {
    /// `None` where the reference range is zero.
    pub eta2: Vec<Option<f64>>,
    pub eta_inf: f64,
    pub eta_inf_percent: f64,
    /// Nodes excluded because their reference range is zero.
    pub flagged: Vec<usize>,
}

pub fn relative_error(reference: &Trajectory, test: &Trajectory) -> Result<RelativeError> {
    let (r, s) = aligned(reference, test)?;
    let n_t = r.len() as f64;
    let n = r[0].len();
    let mut eta2 = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for j in 0..n {
        let (lo, hi) = r
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), st| (lo.min(st[j]), hi.max(st[j])));
        let range = hi - lo;
        if !(range > 0.0) {
            flagged.push(j);
            eta2.push(None);
            continue;
        }
        let sum: f64 = r.iter().zip(&s).map(|(a, b)| (a[j] - b[j]).powi(2) / range).sum();
        eta2.push(Some((sum / n_t).sqrt()));
    }
    let eta_inf = eta2.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(RelativeError {
        eta2,
        eta_inf,
        eta_inf_percent: 100.0 * eta_inf,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub eps2_profile: Vec<f64>,
    pub eps_inf: f64,
    pub eta2_profile: Vec<Option<f64>>,
    pub eta_inf: f64,
    pub eta_inf_percent: f64,
    pub flagged: Vec<usize>,
}

pub fn error_report(reference: &Trajectory, test: &Trajectory) -> Result<ErrorReport> {
    let (eps2_profile, eps_inf) = l2_error(reference, test)?;
    let rel = relative_error(reference, test)?;
    Ok(ErrorReport {
        eps2_profile,
        eps_inf,
        eta2_profile: rel.eta2,
        eta_inf: rel.eta_inf,
        eta_inf_percent: rel.eta_inf_percent,
        flagged: rel.flagged,
    })
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&s| s <= t);
    if i == 0 {
        return values[0];
    }
    if i == times.len() {
        return values[i - 1];
    }
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// Trapezoid integral of a sampled series over `[a, b]`, interpolating at the ends.
fn integrate_window(times: &[f64], values: &[f64], a: f64, b: f64) -> f64 {
    let mut pts = vec![(a, interpolate(times, values, a))];
    for (t, v) in times.iter().zip(values) {
        if *t > a && *t < b {
            pts.push((*t, *v));
        }
    }
    pts.push((b, interpolate(times, values, b)));
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// `E = ∫ J dt` over consecutive windows of length `window` starting at the
/// first sample. `times` in s, `flux` in W/m²; result in J/m². Only complete
/// windows are reported.
pub fn conduction_loads(times: &[f64], flux: &[f64], window: f64) -> Result<Vec<f64>> {
    if times.len() != flux.len() || times.len() < 2 {
        return Err(Error::invalid("flux series needs at least two samples with matching times"));
    }
    if !(window > 0.0) {
        return Err(Error::invalid("window length must be positive"));
    }
    let (start, end) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * end.abs().max(1.0);
    let n = ((end - start + tol) / window).floor() as usize;
    if n == 0 {
        return Err(Error::invalid(format!(
            "window of {window} s exceeds the {} s covered by the flux series",
            end - start
        )));
    }
    Ok((0..n)
        .map(|w| {
            let a = start + w as f64 * window;
            integrate_window(times, flux, a, (a + window).min(end))
        })
        .collect())
}

/// `R₀ = ℓ/k_T(θ = 0)` with `k_poly` in physical units.
pub fn thermal_resistance_standard(length: f64, k_poly: &PropertyPolynomial) -> Result<f64> {
    let k = k_poly.eval(0.0);
    if !(k > 0.0) {
        return Err(Error::NonPhysicalProperty { name: "k_T", value: k, at: 0.0 });
    }
    Ok(length / k)
}

/// Flux magnitude below which an `|ΔT/J|` sample is skipped [W/m²].
pub const MIN_FLUX: f64 = 1e-6;

/// Window averages of `|ΔT/J|`: trapezoid integral over intervals whose two
/// endpoints both carry a usable flux, divided by the covered time. Windows
/// with no usable interval are `None`.
pub fn thermal_resistance_effective(
    times: &[f64],
    delta_t: &[f64],
    flux: &[f64],
    window: f64,
) -> Result<Vec<Option<f64>>> {
    if times.len() != delta_t.len() || times.len() != flux.len() || times.len() < 2 {
        return Err(Error::invalid("resistance series need matching lengths of at least 2"));
    }
    if !(window > 0.0) {
        return Err(Error::invalid("window length must be positive"));
    }
    let (start, end) = (times[0], times[times.len() - 1]);
    let tol = 1e-9 * end.abs().max(1.0);
    let n = ((end - start + tol) / window).floor() as usize;
    let mut out = vec![(0.0, 0.0); n];
    for i in 0..times.len() - 1 {
        let w = ((times[i] - start + tol) / window).floor() as usize;
        if w >= n || flux[i].abs() < MIN_FLUX || flux[i + 1].abs() < MIN_FLUX {
            continue;
        }
        let (a, b) = ((delta_t[i] / flux[i]).abs(), (delta_t[i + 1] / flux[i + 1]).abs());
        let h = times[i + 1] - times[i];
        out[w].0 += 0.5 * h * (a + b);
        out[w].1 += h;
    }
    Ok(out
        .into_iter()
        .map(|(integral, covered)| (covered > 0.0).then(|| integral / covered))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintySpec {
    pub sensor_rel_theta: f64,
    pub sensor_rel_temp: f64,
    /// Δx_P [m]
    pub placement_dx: f64,
}

impl Default for UncertaintySpec {
    fn default() -> Self {
        Self {
            sensor_rel_theta: 2.5e-2,
            sensor_rel_temp: 1.5e-2,
            placement_dx: 5e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensorKind {
    /// Values in °C.
    Temperature,
    /// Volumetric moisture content.
    Moisture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub value: f64,
    pub sigma: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `σ_m = sqrt(σ_S² + σ_P²)` with `σ_S = rel·value` and `σ_P = |∂/∂x|·Δx_P`.
/// `gradients` are in value units per metre.
pub fn measurement_uncertainty(
    values: &[f64],
    kind: SensorKind,
    spec: &UncertaintySpec,
    gradients: &[f64],
) -> Result<Vec<Band>> {
    if values.len() != gradients.len() {
        return Err(Error::invalid("value and gradient series differ in length"));
    }
    let rel = match kind {
        SensorKind::Temperature => spec.sensor_rel_temp,
        SensorKind::Moisture => spec.sensor_rel_theta,
    };
    Ok(values
        .iter()
        .zip(gradients)
        .map(|(&value, &g)| {
            let sigma = (rel * value).hypot(g * spec.placement_dx);
            Band {
                value,
                sigma,
                lower: value - sigma,
                upper: value + sigma,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    pub centers: Vec<f64>,
    pub density: Vec<f64>,
    pub width: f64,
    /// Set when every sample is equal; the result is then a single bin.
    pub degenerate: bool,
}

/// Equal-width histogram density over `[min, max]`; `Σ density·width = 1`.
pub fn distribution_fn(series: &[f64], n_bins: usize) -> Result<Distribution> {
    if series.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    if n_bins == 0 {
        return Err(Error::invalid("need at least one bin"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Ok(Distribution {
            centers: vec![lo],
            density: vec![1.0],
            width: 0.0,
            degenerate: true,
        });
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for v in series {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let total = series.len() as f64;
    Ok(Distribution {
        centers: (0..n_bins).map(|b| lo + (b as f64 + 0.5) * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (total * width)).collect(),
        width,
        degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpuReport {
    pub wall_cm: f64,
    pub wall_arm: f64,
    /// 100·wall_arm/wall_cm [%]
    pub rho_cpu: f64,
    /// Seconds per simulated day.
    pub rho_day_cm: f64,
    pub rho_day_arm: f64,
}

pub fn cpu_metrics(wall_cm: f64, wall_arm: f64, simulated_days: f64) -> Result<CpuReport> {
    if !(wall_cm > 0.0 && wall_arm > 0.0 && simulated_days > 0.0) {
        return Err(Error::invalid("wall times and simulated duration must be positive"));
    }
    Ok(CpuReport {
        wall_cm,
        wall_arm,
        rho_cpu: 100.0 * wall_arm / wall_cm,
        rho_day_cm: wall_cm / simulated_days,
        rho_day_arm: wall_arm / simulated_days,
    })
}
