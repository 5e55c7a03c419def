//! Offline calibration of fluctuation-model parameters by Levenberg–Marquardt
//! against a complete-model reference.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::resample;
use crate::empirical::{FluctuationKind, FluctuationModel};
use crate::heat::{reconstruct, HeatArmConfig, HeatConfig};
use crate::hm::{HmArmConfig, HmConfig};
use crate::integrate::{Stepper, Trajectory};
use crate::{Error, Result};

/// Norm of the residual vector returned for a run that fails numerically.
pub const DIVERGENCE_PENALTY: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub lambda0: f64,
    pub max_iter: usize,
    /// Stop when the relative objective decrease of an accepted step falls below this.
    pub rel_tol: f64,
    /// Stop when the accepted step norm falls below this.
    pub step_tol: f64,
    /// Stop when the largest gradient component falls below this.
    pub grad_tol: f64,
    pub fd_rel: f64,
    pub fd_abs: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            max_iter: 100,
            rel_tol: 1e-8,
            step_tol: 1e-10,
            grad_tol: 1e-10,
            fd_rel: 1e-6,
            fd_abs: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn symmetric(n: usize, limit: f64) -> Self {
        Self {
            lower: vec![-limit; n],
            upper: vec![limit; n],
        }
    }

    fn project(&self, p: &mut [f64]) -> bool {
        let mut clipped = false;
        for ((v, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            if *v < *lo {
                *v = *lo;
                clipped = true;
            } else if *v > *hi {
                *v = *hi;
                clipped = true;
            }
        }
        clipped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RelativeDecrease,
    SmallStep,
    SmallGradient,
    ZeroResidual,
    /// Damping grew without finding a decrease.
    Stalled,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub iterations: usize,
    /// Residual norm at the returned parameters.
    pub objective: f64,
    /// Residual norm of every accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
    pub stop: StopReason,
    /// Some step was clipped to the bounds.
    pub projected: bool,
    pub evaluations: usize,
}

impl LmReport {
    pub fn converged(&self) -> bool {
        self.stop != StopReason::MaxIterations
    }
}

fn sq_norm(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Forward-difference Jacobian with step `max(fd_rel·|p|, fd_abs)`, taken
/// backwards when the forward point would leave the bounds.
pub fn jacobian(
    residual: &mut impl FnMut(&[f64]) -> Vec<f64>,
    p: &[f64],
    r0: &[f64],
    bounds: &Bounds,
    opts: &LmOptions,
) -> DMatrix<f64> {
    let m = r0.len();
    let n = p.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    for i in 0..n {
        let mut h = (opts.fd_rel * p[i].abs()).max(opts.fd_abs);
        if p[i] + h > bounds.upper[i] {
            h = -h;
        }
        q[i] = p[i] + h;
        let h = q[i] - p[i];
        let r = residual(&q);
        for k in 0..m {
            jac[(k, i)] = (r[k] - r0[k]) / h;
        }
        q[i] = p[i];
    }
    jac
}

/// Damped Gauss–Newton on `residual` with Marquardt scaling.
pub fn levenberg_marquardt(
    mut residual: impl FnMut(&[f64]) -> Vec<f64>,
    p0: &[f64],
    bounds: &Bounds,
    opts: &LmOptions,
) -> Result<(Vec<f64>, LmReport)> {
    let n = p0.len();
    if bounds.lower.len() != n || bounds.upper.len() != n {
        return Err(Error::invalid("bounds do not match the parameter count"));
    }
    if p0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("initial parameters must be finite"));
    }
    let mut p = p0.to_vec();
    let mut projected = bounds.project(&mut p);
    let mut r = residual(&p);
    let mut evaluations = 1;
    let mut cost = sq_norm(&r);
    if !cost.is_finite() {
        return Err(Error::invalid("residual is not finite at the initial parameters"));
    }
    let mut lambda = opts.lambda0;
    let mut history = vec![cost.sqrt()];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iter {
        if cost == 0.0 {
            stop = StopReason::ZeroResidual;
            break;
        }
        let jac = jacobian(&mut residual, &p, &r, bounds, opts);
        evaluations += n;
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        if g.amax() < opts.grad_tol {
            stop = StopReason::SmallGradient;
            break;
        }
        iterations += 1;
        let diag_floor = a.diagonal().max() * 1e-12 + f64::MIN_POSITIVE;
        loop {
            if lambda > 1e16 {
                stop = StopReason::Stalled;
                break 'outer;
            }
            let mut damped = a.clone();
            for i in 0..n {
                damped[(i, i)] += lambda * a[(i, i)].max(diag_floor);
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let clipped = bounds.project(&mut trial);
            let r_trial = residual(&trial);
            evaluations += 1;
            let cost_trial = sq_norm(&r_trial);
            if cost_trial.is_finite() && cost_trial < cost {
                projected |= clipped;
                let step_norm = p
                    .iter()
                    .zip(&trial)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let rel = (cost - cost_trial) / cost;
                p = trial;
                r = r_trial;
                cost = cost_trial;
                history.push(cost.sqrt());
                lambda = (lambda / 10.0).max(1e-12);
                if rel < opts.rel_tol {
                    stop = StopReason::RelativeDecrease;
                    break 'outer;
                }
                if step_norm < opts.step_tol {
                    stop = StopReason::SmallStep;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
        }
    }
    Ok((
        p,
        LmReport {
            iterations,
            objective: cost.sqrt(),
            history,
            stop,
            projected,
            evaluations,
        },
    ))
}

/// Penalty residual of norm [`DIVERGENCE_PENALTY`].
fn penalty(len: usize) -> Vec<f64> {
    vec![DIVERGENCE_PENALTY / (len.max(1) as f64).sqrt(); len.max(1)]
}

/// Reference restricted to the times at or before `horizon`.
fn truncate(reference: &Trajectory, horizon: f64) -> Trajectory {
    let tol = 1e-9 * horizon.abs().max(1.0);
    let keep = reference.times.iter().take_while(|t| **t <= horizon + tol).count();
    Trajectory {
        times: reference.times[..keep].to_vec(),
        states: reference.states[..keep].to_vec(),
        wall_time: reference.wall_time,
        n_stages: reference.n_stages,
    }
}

/// Heat calibration data: complete-model forcing and its reference run.
#[derive(Debug, Clone)]
pub struct HeatProblem {
    pub complete: HeatConfig,
    pub reference: Trajectory,
    /// ARM time step.
    pub dt: f64,
    /// Offline horizon 𝕋₁.
    pub horizon: f64,
    /// Nodes entering the residual; `None` uses every node.
    pub sensors: Option<Vec<usize>>,
}

impl HeatProblem {
    pub fn new(complete: HeatConfig, reference: Trajectory, dt: f64, horizon: f64) -> Result<Self> {
        let end = *reference.times.last().unwrap();
        if horizon > end + 1e-9 * end.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "offline horizon {horizon} exceeds the reference horizon {end}"
            )));
        }
        let reference = truncate(&reference, horizon);
        Ok(Self {
            complete,
            reference,
            dt,
            horizon,
            sensors: None,
        })
    }

    fn nodes(&self) -> Vec<usize> {
        self.sensors
            .clone()
            .unwrap_or_else(|| (0..self.complete.grid.n_nodes()).collect())
    }

    fn residual_len(&self) -> usize {
        self.reference.times.len() * self.nodes().len()
    }

    /// Residuals `u_ref − ũ` for a prepared ARM configuration.
    pub fn residuals(&self, arm: &HeatArmConfig) -> Result<Vec<f64>> {
        let traj = arm.run(Stepper::Rkl1 { dt: self.dt, n_stages: None }, self.horizon, 1)?;
        let (times, states) = resample(&traj, &self.reference.times)?;
        if times.len() != self.reference.times.len() {
            return Err(Error::invalid("reduced run does not cover the reference times"));
        }
        let nodes = self.nodes();
        let grid = &arm.base.grid;
        let mut out = Vec::with_capacity(self.residual_len());
        for ((t, ub), reference) in times.iter().zip(&states).zip(&self.reference.states) {
            let u = reconstruct(grid, ub, &arm.fluct, *t);
            out.extend(nodes.iter().map(|&j| reference[j] - u[j]));
        }
        Ok(out)
    }
}

/// ε₂ for one heat candidate: L2 norm of `u_ref − ũ` over all nodes and times.
pub fn objective_heat(model: &FluctuationModel, problem: &HeatProblem) -> Result<f64> {
    let arm = HeatArmConfig::from_complete(&problem.complete, model.clone())?;
    match problem.residuals(&arm) {
        Ok(r) => Ok(sq_norm(&r).sqrt()),
        Err(e) if numerical(&e) => Ok(DIVERGENCE_PENALTY),
        Err(e) => Err(e),
    }
}

fn numerical(e: &Error) -> bool {
    matches!(e, Error::Diverged { .. } | Error::NonPhysicalProperty { .. })
}

/// Coupled calibration data with the per-field weights `ω = 1/(max − min)`.
#[derive(Debug, Clone)]
pub struct HmProblem {
    pub complete: HmConfig,
    pub reference: Trajectory,
    pub dt: f64,
    pub horizon: f64,
    pub omega_u: f64,
    pub omega_v: f64,
    pub sensors: Option<Vec<usize>>,
}

fn range_weight(values: impl Iterator<Item = f64>, name: &str) -> Result<f64> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::invalid(format!("{name} reference has zero range; weight undefined")));
    }
    Ok(1.0 / range)
}

impl HmProblem {
    pub fn new(complete: HmConfig, reference: Trajectory, dt: f64, horizon: f64) -> Result<Self> {
        let end = *reference.times.last().unwrap();
        if horizon > end + 1e-9 * end.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "offline horizon {horizon} exceeds the reference horizon {end}"
            )));
        }
        let reference = truncate(&reference, horizon);
        let n = complete.grid.n_nodes();
        let omega_u = range_weight(reference.states.iter().flat_map(|s| s[..n].to_vec()), "temperature")?;
        let omega_v = range_weight(reference.states.iter().flat_map(|s| s[n..].to_vec()), "moisture")?;
        Ok(Self {
            complete,
            reference,
            dt,
            horizon,
            omega_u,
            omega_v,
            sensors: None,
        })
    }

    fn nodes(&self) -> Vec<usize> {
        self.sensors
            .clone()
            .unwrap_or_else(|| (0..self.complete.grid.n_nodes()).collect())
    }

    fn residual_len(&self) -> usize {
        2 * self.reference.times.len() * self.nodes().len()
    }

    /// Unweighted `(u_ref − ũ, v_ref − ṽ)` residuals.
    pub fn residuals(&self, arm: &HmArmConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        let traj = arm.run(Stepper::Rkl1 { dt: self.dt, n_stages: None }, self.horizon, 1)?;
        let (times, states) = resample(&traj, &self.reference.times)?;
        if times.len() != self.reference.times.len() {
            return Err(Error::invalid("reduced run does not cover the reference times"));
        }
        let n = arm.base.grid.n_nodes();
        let nodes = self.nodes();
        let cap = self.residual_len() / 2;
        let (mut ru, mut rv) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        for ((t, yb), reference) in times.iter().zip(&states).zip(&self.reference.states) {
            let y = arm.reconstruct(yb, *t);
            ru.extend(nodes.iter().map(|&j| reference[j] - y[j]));
            rv.extend(nodes.iter().map(|&j| reference[n + j] - y[n + j]));
        }
        Ok((ru, rv))
    }
}

/// `(ε₂^u, ε₂^v, ε₂^uv)` with `ε₂^uv = ω_u·ε₂^u + ω_v·ε₂^v`.
pub fn objective_hm(
    u_model: &FluctuationModel,
    v_model: &FluctuationModel,
    problem: &HmProblem,
) -> Result<(f64, f64, f64)> {
    let arm = HmArmConfig::from_complete(&problem.complete, u_model.clone(), v_model.clone())?;
    match problem.residuals(&arm) {
        Ok((ru, rv)) => {
            let (eu, ev) = (sq_norm(&ru).sqrt(), sq_norm(&rv).sqrt());
            Ok((eu, ev, problem.omega_u * eu + problem.omega_v * ev))
        }
        Err(e) if numerical(&e) => Ok((DIVERGENCE_PENALTY, DIVERGENCE_PENALTY, DIVERGENCE_PENALTY)),
        Err(e) => Err(e),
    }
}

/// A fluctuation model (or pair) to calibrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Candidate {
    Heat(FluctuationKind),
    Hm { u: FluctuationKind, v: FluctuationKind },
}

impl Candidate {
    pub fn label(&self) -> String {
        match self {
            Candidate::Heat(k) => k.name().to_string(),
            Candidate::Hm { u, v } => format!("{u}+{v}"),
        }
    }

    fn kinds(&self) -> Vec<FluctuationKind> {
        match *self {
            Candidate::Heat(k) => vec![k],
            Candidate::Hm { u, v } => vec![u, v],
        }
    }

    pub fn n_params(&self) -> usize {
        self.kinds().iter().map(|k| k.n_params()).sum()
    }

    pub fn default_params(&self) -> Vec<f64> {
        self.kinds().iter().flat_map(|k| k.default_params()).collect()
    }

    /// Column names for the stacked parameter vector.
    pub fn param_names(&self) -> Vec<String> {
        match *self {
            Candidate::Heat(k) => k.param_names().iter().map(|s| s.to_string()).collect(),
            Candidate::Hm { u, v } => u
                .param_names()
                .iter()
                .map(|s| format!("u:{s}"))
                .chain(v.param_names().iter().map(|s| format!("v:{s}")))
                .collect(),
        }
    }

    fn free_params(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut offset = 0;
        for k in self.kinds() {
            out.extend(k.free_params().into_iter().map(|i| i + offset));
            offset += k.n_params();
        }
        out
    }

    /// Splits a stacked parameter vector into models with period `tau`.
    pub fn models(&self, params: &[f64], tau: f64) -> Result<Vec<FluctuationModel>> {
        let mut out = Vec::new();
        let mut offset = 0;
        for k in self.kinds() {
            out.push(FluctuationModel::new(k, params[offset..offset + k.n_params()].to_vec(), tau)?);
            offset += k.n_params();
        }
        Ok(out)
    }
}

/// The calibration target for one run of [`offline_calibrate`].
#[derive(Debug, Clone)]
pub enum Problem {
    Heat(HeatProblem),
    Hm(HmProblem),
}

impl Problem {
    fn horizon(&self) -> f64 {
        match self {
            Problem::Heat(p) => p.horizon,
            Problem::Hm(p) => p.horizon,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CalibrationSettings {
    pub candidates: Vec<Candidate>,
    pub tau_list: Vec<f64>,
    /// Per-candidate starting point; defaults to the kind defaults.
    pub initial: Vec<Option<Vec<f64>>>,
    pub n_starts: usize,
    /// Relative half-width of the random starts around the initial point.
    pub spread: f64,
    pub seed: u64,
    pub jobs: usize,
    pub bound: f64,
    pub lm: LmOptions,
    /// Simulated days per unit of dimensionless time, for the per-day CPU ratio.
    pub days_per_unit: f64,
}

impl CalibrationSettings {
    pub fn new(candidates: Vec<Candidate>, tau_list: Vec<f64>) -> Self {
        let initial = vec![None; candidates.len()];
        Self {
            candidates,
            tau_list,
            initial,
            n_starts: 5,
            spread: 0.5,
            seed: 0,
            jobs: 1,
            bound: 1e3,
            lm: LmOptions::default(),
            days_per_unit: 1.0 / 24.0,
        }
    }
}

/// One (τ, candidate) row of the calibration table.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationCell {
    pub candidate: Candidate,
    pub tau: f64,
    pub params: Vec<f64>,
    /// Heat: ε₂. Coupled: ε₂^uv.
    pub eps2: f64,
    pub eps2_u: Option<f64>,
    pub eps2_v: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub projected: bool,
    /// Index of the start that produced the best fit.
    pub best_start: usize,
    /// ARM wall time per simulated day at the fitted parameters [s/d].
    pub cpu_per_day: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub cells: Vec<CalibrationCell>,
}

impl CalibrationResult {
    pub fn for_candidate(&self, candidate: Candidate) -> Vec<&CalibrationCell> {
        self.cells.iter().filter(|c| c.candidate == candidate).collect()
    }

    pub fn best(&self, candidate: Candidate, tau: f64) -> Option<&CalibrationCell> {
        self.cells
            .iter()
            .find(|c| c.candidate == candidate && (c.tau - tau).abs() <= 1e-9 * tau.max(1.0))
    }
}

/// Starting points: the initial guess, then seeded draws `p0·(1 + spread·U(−1, 1))`
/// on the free parameters.
pub fn starting_points(p0: &[f64], free: &[usize], n_starts: usize, spread: f64, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut out = vec![p0.to_vec()];
    for _ in 1..n_starts {
        let mut p = p0.to_vec();
        for &i in free {
            let f: f64 = rng.random_range(-1.0..=1.0);
            p[i] = if p0[i] == 0.0 { spread * f } else { p0[i] * (1.0 + spread * f) };
        }
        out.push(p);
    }
    out
}

struct Fit {
    params: Vec<f64>,
    report: LmReport,
}

fn fit_heat(problem: &HeatProblem, averaged: &HeatConfig, candidate: Candidate, tau: f64, start: &[f64], free: &[usize], settings: &CalibrationSettings) -> Result<Fit> {
    let len = problem.residual_len();
    let expand = |q: &[f64]| {
        let mut p = start.to_vec();
        for (k, &i) in free.iter().enumerate() {
            p[i] = q[k];
        }
        p
    };
    let residual = |q: &[f64]| -> Vec<f64> {
        let p = expand(q);
        let Ok(models) = candidate.models(&p, tau) else {
            return penalty(len);
        };
        let arm = HeatArmConfig::from_averaged(averaged.clone(), models[0].clone());
        problem.residuals(&arm).unwrap_or_else(|_| penalty(len))
    };
    let q0: Vec<f64> = free.iter().map(|&i| start[i]).collect();
    let bounds = Bounds::symmetric(free.len(), settings.bound);
    let (q, report) = levenberg_marquardt(residual, &q0, &bounds, &settings.lm)?;
    Ok(Fit { params: expand(&q), report })
}

fn fit_hm(problem: &HmProblem, averaged: &HmConfig, candidate: Candidate, tau: f64, start: &[f64], free: &[usize], settings: &CalibrationSettings) -> Result<Fit> {
    let len = problem.residual_len();
    let expand = |q: &[f64]| {
        let mut p = start.to_vec();
        for (k, &i) in free.iter().enumerate() {
            p[i] = q[k];
        }
        p
    };
    let residual = |q: &[f64]| -> Vec<f64> {
        let p = expand(q);
        let Ok(models) = candidate.models(&p, tau) else {
            return penalty(len);
        };
        let Ok(arm) = HmArmConfig::from_averaged(averaged.clone(), models[0].clone(), models[1].clone()) else {
            return penalty(len);
        };
        match problem.residuals(&arm) {
            Ok((ru, rv)) => ru
                .iter()
                .map(|r| problem.omega_u * r)
                .chain(rv.iter().map(|r| problem.omega_v * r))
                .collect(),
            Err(_) => penalty(len),
        }
    };
    let q0: Vec<f64> = free.iter().map(|&i| start[i]).collect();
    let bounds = Bounds::symmetric(free.len(), settings.bound);
    let (q, report) = levenberg_marquardt(residual, &q0, &bounds, &settings.lm)?;
    Ok(Fit { params: expand(&q), report })
}

/// Fits every (τ, candidate) cell from several starting points and keeps
/// the best. Cells and starts run in parallel on at most `jobs` threads.
pub fn offline_calibrate(problem: &Problem, settings: &CalibrationSettings) -> Result<CalibrationResult> {
    if settings.candidates.is_empty() || settings.tau_list.is_empty() {
        return Err(Error::invalid("calibration needs at least one candidate and one period"));
    }
    if settings.initial.len() != settings.candidates.len() {
        return Err(Error::invalid("one initial guess slot per candidate is required"));
    }
    for (c, init) in settings.candidates.iter().zip(&settings.initial) {
        match (problem, c) {
            (Problem::Heat(_), Candidate::Heat(_)) | (Problem::Hm(_), Candidate::Hm { .. }) => {}
            _ => return Err(Error::invalid(format!("candidate {} does not fit this problem", c.label()))),
        }
        if let Some(p) = init {
            if p.len() != c.n_params() {
                return Err(Error::invalid(format!(
                    "initial guess for {} has {} values, expected {}",
                    c.label(),
                    p.len(),
                    c.n_params()
                )));
            }
        }
    }

    // Averaged forcing per τ, shared by all candidates and starts.
    enum Averaged {
        Heat(HeatConfig),
        Hm(HmConfig),
    }
    let averaged: Vec<Averaged> = settings
        .tau_list
        .iter()
        .map(|&tau| match problem {
            Problem::Heat(p) => p.complete.averaged(tau).map(Averaged::Heat),
            Problem::Hm(p) => p.complete.averaged(tau).map(Averaged::Hm),
        })
        .collect::<Result<_>>()?;

    let n_starts = settings.n_starts.max(1);
    let mut jobs_list = Vec::new();
    for (ti, _) in settings.tau_list.iter().enumerate() {
        for (ci, c) in settings.candidates.iter().enumerate() {
            let p0 = settings.initial[ci].clone().unwrap_or_else(|| c.default_params());
            let cell = (ti * settings.candidates.len() + ci) as u64;
            let starts = starting_points(&p0, &c.free_params(), n_starts, settings.spread, settings.seed, cell);
            for (si, s) in starts.into_iter().enumerate() {
                jobs_list.push((ti, ci, si, s));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let fits: Vec<Result<Fit>> = pool.install(|| {
        jobs_list
            .par_iter()
            .map(|(ti, ci, _, start)| {
                let tau = settings.tau_list[*ti];
                let c = settings.candidates[*ci];
                let free = c.free_params();
                match (problem, &averaged[*ti]) {
                    (Problem::Heat(p), Averaged::Heat(a)) => fit_heat(p, a, c, tau, start, &free, settings),
                    (Problem::Hm(p), Averaged::Hm(a)) => fit_hm(p, a, c, tau, start, &free, settings),
                    _ => unreachable!("problem and averaged forcing share a variant"),
                }
            })
            .collect()
    });

    let mut cells = Vec::new();
    for (ti, &tau) in settings.tau_list.iter().enumerate() {
        for (ci, &c) in settings.candidates.iter().enumerate() {
            let mut best: Option<(usize, &Fit)> = None;
            for (k, (t2, c2, si, _)) in jobs_list.iter().enumerate() {
                if *t2 != ti || *c2 != ci {
                    continue;
                }
                let fit = match &fits[k] {
                    Ok(f) => f,
                    Err(e) => return Err(Error::invalid(format!("calibration of {} failed: {e}", c.label()))),
                };
                if best.is_none_or(|(_, b)| fit.report.objective < b.report.objective) {
                    best = Some((*si, fit));
                }
            }
            let (best_start, fit) = best.expect("every cell has at least one start");
            let models = c.models(&fit.params, tau)?;
            let diverged = fit.report.objective >= DIVERGENCE_PENALTY * (1.0 - 1e-9);
            let started = Instant::now();
            let (eps2, eps2_u, eps2_v) = match problem {
                Problem::Heat(p) => (objective_heat(&models[0], p)?, None, None),
                Problem::Hm(p) => {
                    let (eu, ev, euv) = objective_hm(&models[0], &models[1], p)?;
                    (euv, Some(eu), Some(ev))
                }
            };
            let wall = started.elapsed().as_secs_f64();
            let days = problem.horizon() * settings.days_per_unit;
            cells.push(CalibrationCell {
                candidate: c,
                tau,
                params: fit.params.clone(),
                eps2,
                eps2_u,
                eps2_v,
                iterations: fit.report.iterations,
                converged: fit.report.converged() && !diverged,
                projected: fit.report.projected,
                best_start,
                cpu_per_day: if days > 0.0 { wall / days } else { 0.0 },
            });
        }
    }
    Ok(CalibrationResult { cells })
}

/// Writes one candidate's rows: `tau_hours`, parameters, errors and flags.
pub fn write_table(path: &Path, cells: &[&CalibrationCell], hours_per_unit: f64) -> Result<()> {
    let Some(first) = cells.first() else {
        return Err(Error::invalid("no calibration rows to write"));
    };
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let coupled = matches!(first.candidate, Candidate::Hm { .. });
    let mut header = vec!["candidate".to_string(), "tau_hours".to_string()];
    header.extend(first.candidate.param_names());
    if coupled {
        header.extend(["eps2_u", "eps2_v", "eps2_uv"].map(String::from));
    } else {
        header.push("eps2".into());
    }
    header.extend(["iterations", "converged", "projected", "cpu_s_per_day"].map(String::from));
    writeln!(out, "{}", header.join(","))?;
    for c in cells {
        let mut row = vec![c.candidate.label(), format!("{}", c.tau * hours_per_unit)];
        row.extend(c.params.iter().map(|p| format!("{p:e}")));
        if coupled {
            row.push(format!("{:e}", c.eps2_u.unwrap_or(f64::NAN)));
            row.push(format!("{:e}", c.eps2_v.unwrap_or(f64::NAN)));
        }
        row.push(format!("{:e}", c.eps2));
        row.push(c.iterations.to_string());
        row.push(c.converged.to_string());
        row.push(c.projected.to_string());
        row.push(format!("{:e}", c.cpu_per_day));
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads the parameters of the row with period `tau_hours` from a table
/// written by [`write_table`].
pub fn read_params(path: &Path, candidate: Candidate, tau_hours: f64) -> Result<Vec<f64>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(1, e.to_string()))?;
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names = candidate.param_names();
    let cols: Vec<usize> = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| parse_err(1, format!("missing column `{n}`")))
        })
        .collect::<Result<_>>()?;
    let tau_col = headers
        .iter()
        .position(|h| h == "tau_hours")
        .ok_or_else(|| parse_err(1, "missing column `tau_hours`".into()))?;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let num = |c: usize| -> Result<f64> {
            record
                .get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| parse_err(line, format!("column {} is not a number", c + 1)))
        };
        if (num(tau_col)? - tau_hours).abs() <= 1e-9 * tau_hours.max(1.0) {
            return cols.iter().map(|&c| num(c)).collect();
        }
    }
    Err(parse_err(0, format!("no row for τ = {tau_hours} h")))
}
