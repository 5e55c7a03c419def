//! `simulate`, `calibrate` and `compare`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use armsim_core::analysis::{
    conduction_loads, cpu_metrics, error_report, relative_error, resample, scalar_series,
    thermal_resistance_effective, ErrorReport,
};
use armsim_core::calibrate::{
    offline_calibrate, write_table, CalibrationSettings, Candidate, HeatProblem, HmProblem, LmOptions, Problem,
};
use armsim_core::empirical::FluctuationKind;
use armsim_core::heat::{heat_flux, reconstruct_trajectory, HeatArmConfig, HeatConfig};
use armsim_core::hm::{split, total_flux, FluxConstants, HmArmConfig, HmConfig};
use armsim_core::integrate::{OdeSystem, Trajectory};
use armsim_core::units::QuantityKind;

use crate::config::{ModelKind, ProblemKind, RunConfig};
use crate::CliError;

/// Ordered `key=value` lines.
#[derive(Debug, Default, Clone)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k}={v}");
        }
        fs::write(path, s).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

fn ensure_dir(out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(io(out))
}

fn check_horizon(hours: f64) -> Result<(), CliError> {
    if !(hours > 0.0) {
        return Err(CliError::Config("empty time span: the horizon must be positive".into()));
    }
    Ok(())
}

/// A finished run: trajectory of the model fields and its flux series.
struct Run {
    /// Reconstructed (reduced model) or plain (complete model) fields.
    fields: Trajectory,
    /// Averaged fields of the reduced model.
    averaged: Option<Trajectory>,
    /// Output flux at x = ℓ in W/m².
    flux: Vec<f64>,
    /// `T(ℓ) − T(0)` in K.
    delta_t: Vec<f64>,
    wall: f64,
    n_stages: usize,
}

fn heat_outputs(cfg: &RunConfig, hc: &HeatConfig, traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let flux = traj
        .states
        .iter()
        .map(|u| cfg.scales.redimensionalize(heat_flux(hc, u), QuantityKind::Flux))
        .collect();
    let delta = traj
        .states
        .iter()
        .map(|u| (u[u.len() - 1] - u[0]) * cfg.scales.temp_ref)
        .collect();
    (flux, delta)
}

fn hm_outputs(cfg: &RunConfig, hc: &HmConfig, traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let spec = cfg.hm.as_ref().expect("coupled config checked");
    let k = FluxConstants {
        scales: cfg.scales,
        latent_heat: spec.physical.latent_heat,
        k_tm: spec.physical.k_tm,
    };
    let mut flux = Vec::with_capacity(traj.states.len());
    let mut delta = Vec::with_capacity(traj.states.len());
    for y in &traj.states {
        let (u, v) = split(y);
        flux.push(total_flux(hc, u, v, &k).j_qm);
        delta.push((u[u.len() - 1] - u[0]) * cfg.scales.temp_ref);
    }
    Ok((flux, delta))
}

fn run_model(cfg: &RunConfig, model: ModelKind, tau_hours: f64, dt_hours: f64, stride: usize) -> Result<Run, CliError> {
    let horizon_hours = cfg.time.horizon_hours;
    check_horizon(horizon_hours)?;
    let horizon = cfg.t(horizon_hours);
    let stepper = cfg.stepper(dt_hours);
    match (cfg.problem, model) {
        (ProblemKind::Heat, ModelKind::Cm) => {
            let hc = cfg.heat_config(horizon_hours)?;
            let n_stages = cfg.check_stages(&hc as &dyn OdeSystem, dt_hours)?;
            let traj = hc.run(stepper, horizon, stride)?;
            let (flux, delta_t) = heat_outputs(cfg, &hc, &traj);
            Ok(Run {
                wall: traj.wall_time,
                fields: traj,
                averaged: None,
                flux,
                delta_t,
                n_stages,
            })
        }
        (ProblemKind::Heat, ModelKind::Arm) => {
            cfg.check_periods(&[tau_hours])?;
            let hc = cfg.heat_config(horizon_hours)?;
            let models = cfg.arm_models(tau_hours)?;
            let arm = HeatArmConfig::from_complete(&hc, models[0].clone())?;
            let n_stages = cfg.check_stages(&arm as &dyn OdeSystem, dt_hours)?;
            let bar = arm.run(stepper, horizon, stride)?;
            let fields = reconstruct_trajectory(&hc.grid, &bar, &models[0]);
            let (flux, delta_t) = heat_outputs(cfg, &hc, &fields);
            Ok(Run {
                wall: bar.wall_time,
                fields,
                averaged: Some(bar),
                flux,
                delta_t,
                n_stages,
            })
        }
        (ProblemKind::Hm, ModelKind::Cm) => {
            let hc = cfg.hm_config(horizon_hours)?;
            let n_stages = cfg.check_stages(&hc as &dyn OdeSystem, dt_hours)?;
            let traj = hc.run(stepper, horizon, stride)?;
            let (flux, delta_t) = hm_outputs(cfg, &hc, &traj)?;
            Ok(Run {
                wall: traj.wall_time,
                fields: traj,
                averaged: None,
                flux,
                delta_t,
                n_stages,
            })
        }
        (ProblemKind::Hm, ModelKind::Arm) => {
            cfg.check_periods(&[tau_hours])?;
            let hc = cfg.hm_config(horizon_hours)?;
            let models = cfg.arm_models(tau_hours)?;
            let arm = HmArmConfig::from_complete(&hc, models[0].clone(), models[1].clone())?;
            let n_stages = cfg.check_stages(&arm as &dyn OdeSystem, dt_hours)?;
            let bar = arm.run(stepper, horizon, stride)?;
            let fields = arm.reconstruct_trajectory(&bar);
            let (flux, delta_t) = hm_outputs(cfg, &hc, &fields)?;
            Ok(Run {
                wall: bar.wall_time,
                fields,
                averaged: Some(bar),
                flux,
                delta_t,
                n_stages,
            })
        }
    }
}

fn groups_metadata(cfg: &RunConfig, meta: &mut Metadata) -> Result<(), CliError> {
    match cfg.problem {
        ProblemKind::Heat => {
            let (fo, derived) = cfg.heat_fo()?;
            meta.push("fo_t", format!("{fo:.6e}"));
            meta.push("fo_t.derived", derived);
            let spec = cfg.heat.as_ref().expect("heat config checked");
            meta.push("bi_left", spec.bi_left);
            meta.push("bi_right", spec.bi_right);
        }
        ProblemKind::Hm => {
            let (g, flags) = cfg.hm_groups()?;
            for ((name, value), derived) in [("fo_m", g.fo_m), ("fo_t", g.fo_t), ("gamma", g.gamma), ("delta", g.delta)]
                .into_iter()
                .zip(flags)
            {
                meta.push(name, format!("{value:.6e}"));
                meta.push(format!("{name}.derived"), derived);
            }
        }
    }
    Ok(())
}

fn base_metadata(cfg: &RunConfig, command: &str) -> Result<Metadata, CliError> {
    let mut meta = Metadata::default();
    meta.push("command", command);
    meta.push(
        "problem",
        match cfg.problem {
            ProblemKind::Heat => "heat",
            ProblemKind::Hm => "hm",
        },
    );
    meta.push("seed", cfg.seed);
    meta.push("horizon_hours", cfg.time.horizon_hours);
    meta.push("dx", cfg.grid.dx);
    groups_metadata(cfg, &mut meta)?;
    Ok(meta)
}

fn write_fields(path: &Path, cfg: &RunConfig, run: &Run) -> Result<(), CliError> {
    let hours = cfg.scales.t_ref / 3600.0;
    let mut w = create(path)?;
    let coupled = cfg.problem == ProblemKind::Hm;
    let mut header = String::from("time_hours,x,u");
    if run.averaged.is_some() {
        header.push_str(",u_bar");
    }
    if coupled {
        header.push_str(",v");
        if run.averaged.is_some() {
            header.push_str(",v_bar");
        }
    }
    writeln!(w, "{header}").map_err(io(path))?;
    for (i, (t, y)) in run.fields.times.iter().zip(&run.fields.states).enumerate() {
        let bar = run.averaged.as_ref().map(|b| b.states[i].as_slice());
        let n = if coupled { y.len() / 2 } else { y.len() };
        for j in 0..n {
            let x = j as f64 / (n - 1) as f64;
            let mut line = format!("{},{x},{}", t * hours, y[j]);
            if let Some(b) = bar {
                let _ = write!(line, ",{}", b[j]);
            }
            if coupled {
                let _ = write!(line, ",{}", y[n + j]);
                if let Some(b) = bar {
                    let _ = write!(line, ",{}", b[n + j]);
                }
            }
            writeln!(w, "{line}").map_err(io(path))?;
        }
    }
    w.flush().map_err(io(path))
}

fn write_final(path: &Path, cfg: &RunConfig, run: &Run) -> Result<(), CliError> {
    let mut w = create(path)?;
    let y = run.fields.final_state();
    let coupled = cfg.problem == ProblemKind::Hm;
    writeln!(w, "{}", if coupled { "x,u,v" } else { "x,u" }).map_err(io(path))?;
    let n = if coupled { y.len() / 2 } else { y.len() };
    for j in 0..n {
        let x = j as f64 / (n - 1) as f64;
        if coupled {
            writeln!(w, "{x},{},{}", y[j], y[n + j]).map_err(io(path))?;
        } else {
            writeln!(w, "{x},{}", y[j]).map_err(io(path))?;
        }
    }
    w.flush().map_err(io(path))
}

fn write_flux(path: &Path, cfg: &RunConfig, run: &Run) -> Result<(), CliError> {
    let hours = cfg.scales.t_ref / 3600.0;
    let mut w = create(path)?;
    writeln!(w, "time_hours,flux_w_m2,delta_t_k").map_err(io(path))?;
    for ((t, j), d) in run.fields.times.iter().zip(&run.flux).zip(&run.delta_t) {
        writeln!(w, "{},{j},{d}", t * hours).map_err(io(path))?;
    }
    w.flush().map_err(io(path))
}

fn seconds(cfg: &RunConfig, times: &[f64]) -> Vec<f64> {
    times.iter().map(|t| t * cfg.scales.t_ref).collect()
}

/// Paths written by [`simulate`].
#[derive(Debug, Clone)]
pub struct SimulateFiles {
    pub trajectory: PathBuf,
    pub flux: PathBuf,
    pub final_state: PathBuf,
    pub metadata: PathBuf,
}

/// Runs the configured model and writes fields, fluxes and a sidecar.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(SimulateFiles, Metadata), CliError> {
    check_horizon(cfg.time.horizon_hours)?;
    let dt_hours = cfg.time.dt_hours;
    let stride = cfg.stride(dt_hours)?;
    let tau_hours = match cfg.model {
        ModelKind::Arm => cfg
            .arm
            .as_ref()
            .ok_or_else(|| CliError::Config("model = \"arm\" needs an [arm] section".into()))?
            .tau_hours,
        ModelKind::Cm => 0.0,
    };
    let run = run_model(cfg, cfg.model, tau_hours, dt_hours, stride)?;
    ensure_dir(out)?;
    let files = SimulateFiles {
        trajectory: out.join("trajectory.csv"),
        flux: out.join("flux.csv"),
        final_state: out.join("final_state.csv"),
        metadata: out.join("metadata.txt"),
    };
    write_fields(&files.trajectory, cfg, &run)?;
    write_flux(&files.flux, cfg, &run)?;
    write_final(&files.final_state, cfg, &run)?;

    let mut meta = base_metadata(cfg, "simulate")?;
    meta.push(
        "model",
        match cfg.model {
            ModelKind::Cm => "cm",
            ModelKind::Arm => "arm",
        },
    );
    meta.push("dt_s_hours", dt_hours);
    if cfg.model == ModelKind::Arm {
        meta.push("tau_hours", tau_hours);
        // steps per averaging period, reported only
        meta.push("n_sts", tau_hours / dt_hours);
    }
    meta.push("n_stages", run.n_stages);
    if cfg.problem == ProblemKind::Hm {
        let times = seconds(cfg, &run.fields.times);
        let window = cfg.compare.as_ref().map_or(24.0, |c| c.resistance_window_hours) * 3600.0;
        if times.last().copied().unwrap_or(0.0) >= window {
            let r = thermal_resistance_effective(&times, &run.delta_t, &run.flux, window)?;
            let path = out.join("resistance.csv");
            let mut w = create(&path)?;
            writeln!(w, "window,r_m2k_w").map_err(io(&path))?;
            for (i, v) in r.iter().enumerate() {
                match v {
                    Some(v) => writeln!(w, "{i},{v}"),
                    None => writeln!(w, "{i},"),
                }
                .map_err(io(&path))?;
            }
            w.flush().map_err(io(&path))?;
        }
    }
    meta.push("wall_time_s", format!("{:.6}", run.wall));
    meta.write(&files.metadata)?;
    Ok((files, meta))
}

fn sanitize(label: &str) -> String {
    label.replace('+', "_")
}

/// Result of [`calibrate`]: one table per candidate.
#[derive(Debug, Clone)]
pub struct CalibrateFiles {
    pub tables: Vec<(Candidate, PathBuf)>,
    pub metadata: PathBuf,
}

/// Fits every candidate at every configured period against an in-run
/// complete-model reference.
pub fn calibrate(cfg: &RunConfig, out: &Path) -> Result<(CalibrateFiles, Metadata), CliError> {
    let spec = cfg
        .calibrate
        .as_ref()
        .ok_or_else(|| CliError::Config("calibrate needs a [calibrate] section".into()))?;
    check_horizon(spec.horizon_hours)?;
    if spec.u_candidates.is_empty() || spec.tau_hours.is_empty() {
        return Err(CliError::Config("calibrate needs candidates and periods".into()));
    }
    cfg.check_periods(&spec.tau_hours)?;
    let dt_hours = spec.dt_hours.unwrap_or(cfg.time.dt_hours);
    let horizon = cfg.t(spec.horizon_hours);
    let ref_stepper = cfg.stepper(cfg.time.dt_hours);
    let ref_stride = {
        let r = dt_hours / cfg.time.dt_hours;
        r.round().max(1.0) as usize
    };
    let guess = |kind: FluctuationKind| spec.initial.get(kind.name()).cloned();

    let (problem, candidates) = match cfg.problem {
        ProblemKind::Heat => {
            let hc = cfg.heat_config(spec.horizon_hours)?;
            cfg.check_stages(&hc as &dyn OdeSystem, cfg.time.dt_hours)?;
            let reference = hc.run(ref_stepper, horizon, ref_stride)?;
            let mut p = HeatProblem::new(hc, reference, cfg.t(dt_hours), horizon)?;
            p.sensors = spec.sensors.clone();
            let c: Vec<Candidate> = spec.u_candidates.iter().map(|&k| Candidate::Heat(k)).collect();
            (Problem::Heat(p), c)
        }
        ProblemKind::Hm => {
            let v = spec
                .v_candidate
                .ok_or_else(|| CliError::Config("coupled calibration needs v_candidate".into()))?;
            let hc = cfg.hm_config(spec.horizon_hours)?;
            cfg.check_stages(&hc as &dyn OdeSystem, cfg.time.dt_hours)?;
            let reference = hc.run(ref_stepper, horizon, ref_stride)?;
            let mut p = HmProblem::new(hc, reference, cfg.t(dt_hours), horizon)?;
            p.sensors = spec.sensors.clone();
            let c: Vec<Candidate> = spec.u_candidates.iter().map(|&u| Candidate::Hm { u, v }).collect();
            (Problem::Hm(p), c)
        }
    };
    let initial: Vec<Option<Vec<f64>>> = candidates
        .iter()
        .map(|c| match *c {
            Candidate::Heat(k) => guess(k),
            Candidate::Hm { u, v } => {
                if guess(u).is_none() && guess(v).is_none() {
                    None
                } else {
                    let mut p = guess(u).unwrap_or_else(|| u.default_params());
                    p.extend(guess(v).unwrap_or_else(|| v.default_params()));
                    Some(p)
                }
            }
        })
        .collect();

    let mut settings = CalibrationSettings::new(candidates.clone(), spec.tau_hours.iter().map(|&h| cfg.t(h)).collect());
    settings.initial = initial;
    settings.n_starts = spec.starts;
    settings.spread = spec.spread;
    settings.seed = cfg.seed;
    settings.jobs = cfg.jobs;
    settings.bound = spec.bound;
    settings.lm = LmOptions {
        max_iter: spec.max_iter,
        ..LmOptions::default()
    };
    settings.days_per_unit = cfg.scales.t_ref / 86_400.0;
    let started = Instant::now();
    let result = offline_calibrate(&problem, &settings)?;
    let wall = started.elapsed().as_secs_f64();

    ensure_dir(out)?;
    let hours = cfg.scales.t_ref / 3600.0;
    let mut tables = Vec::new();
    for c in &candidates {
        let path = out.join(format!("calibration_{}.csv", sanitize(&c.label())));
        write_table(&path, &result.for_candidate(*c), hours)?;
        tables.push((*c, path));
    }
    let mut meta = base_metadata(cfg, "calibrate")?;
    meta.push("offline_horizon_hours", spec.horizon_hours);
    meta.push("dt_s_hours", dt_hours);
    meta.push("starts", spec.starts);
    let converged = result.cells.iter().filter(|c| c.converged).count();
    meta.push("cells", result.cells.len());
    meta.push("cells_converged", converged);
    for cell in &result.cells {
        meta.push(
            format!("cpu_s_per_day.{}.tau={}", cell.candidate.label(), cell.tau * hours),
            format!("{:.6e}", cell.cpu_per_day),
        );
    }
    meta.push("wall_time_s", format!("{wall:.6}"));
    let metadata = out.join("calibration_metadata.txt");
    meta.write(&metadata)?;
    if converged == 0 {
        return Err(CliError::Numerical("no calibration cell converged".into()));
    }
    Ok((CalibrateFiles { tables, metadata }, meta))
}

/// One compared run.
#[derive(Debug, Clone)]
pub struct CompareRow {
    pub model: ModelKind,
    pub tau_hours: Option<f64>,
    pub dt_hours: f64,
    pub n_stages: usize,
    pub u: ErrorReport,
    pub v: Option<ErrorReport>,
    pub flux_eta_inf: f64,
    pub loads: Vec<f64>,
    pub wall: f64,
}

#[derive(Debug, Clone)]
pub struct CompareOutput {
    pub rows: Vec<CompareRow>,
    pub reference_loads: Vec<f64>,
    pub errors: PathBuf,
    pub loads: Option<PathBuf>,
    pub metadata: PathBuf,
}

fn aligned_flux(times: &[f64], run: &Run) -> Result<Trajectory, CliError> {
    let series = scalar_series(run.fields.times.clone(), &run.flux);
    let (t, s) = resample(&series, times)?;
    Ok(Trajectory {
        times: t,
        states: s,
        wall_time: 0.0,
        n_stages: 0,
    })
}

fn field_part(traj: &Trajectory, coupled: bool, moisture: bool) -> Trajectory {
    if !coupled {
        return traj.clone();
    }
    Trajectory {
        times: traj.times.clone(),
        states: traj
            .states
            .iter()
            .map(|y| {
                let (u, v) = split(y);
                if moisture { v.to_vec() } else { u.to_vec() }
            })
            .collect(),
        wall_time: traj.wall_time,
        n_stages: traj.n_stages,
    }
}

/// Sweeps both models over the configured steps and periods against a
/// complete-model reference run at `reference_dt_hours`.
pub fn compare(cfg: &RunConfig, out: &Path) -> Result<CompareOutput, CliError> {
    let spec = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Config("compare needs a [compare] section".into()))?
        .clone();
    check_horizon(cfg.time.horizon_hours)?;
    cfg.check_periods(&spec.tau_hours)?;
    let coupled = cfg.problem == ProblemKind::Hm;
    let reference = run_model(cfg, ModelKind::Cm, 0.0, spec.reference_dt_hours, cfg.stride(spec.reference_dt_hours)?)?;
    let times = reference.fields.times.clone();
    let ref_flux = scalar_series(times.clone(), &reference.flux);
    let ref_u = field_part(&reference.fields, coupled, false);
    let ref_v = coupled.then(|| field_part(&reference.fields, coupled, true));
    let window = spec.loads_window_hours * 3600.0;
    let ref_seconds = seconds(cfg, &times);
    let with_loads = ref_seconds.last().copied().unwrap_or(0.0) + 1e-6 >= window;
    let loads_of = |run: &Run| -> Result<Vec<f64>, CliError> {
        if !with_loads {
            return Ok(Vec::new());
        }
        Ok(conduction_loads(&seconds(cfg, &run.fields.times), &run.flux, window)?)
    };
    let reference_loads = loads_of(&reference)?;

    let mut cases: Vec<(ModelKind, Option<f64>, f64)> = Vec::new();
    for &dt in &spec.dt_hours {
        cases.push((ModelKind::Cm, None, dt));
        for &tau in &spec.tau_hours {
            cases.push((ModelKind::Arm, Some(tau), dt));
        }
    }
    let evaluate = |&(model, tau, dt): &(ModelKind, Option<f64>, f64)| -> Result<CompareRow, CliError> {
        let run = run_model(cfg, model, tau.unwrap_or(0.0), dt, 1)?;
        let u = error_report(&ref_u, &field_part(&run.fields, coupled, false))?;
        let v = match &ref_v {
            Some(r) => Some(error_report(r, &field_part(&run.fields, coupled, true))?),
            None => None,
        };
        let flux = relative_error(&ref_flux, &aligned_flux(&times, &run)?)?;
        Ok(CompareRow {
            model,
            tau_hours: tau,
            dt_hours: dt,
            n_stages: run.n_stages,
            u,
            v,
            flux_eta_inf: flux.eta_inf,
            loads: loads_of(&run)?,
            wall: run.wall,
        })
    };
    // Sequential runs keep the wall times comparable.
    let rows: Vec<CompareRow> = cases.iter().map(evaluate).collect::<Result<_, _>>()?;

    ensure_dir(out)?;
    let errors = out.join("compare_errors.csv");
    {
        let mut w = create(&errors)?;
        let mut header = String::from("model,tau_hours,dt_hours,n_stages,eps_inf_u,eta_inf_u,eta_inf_u_percent");
        if coupled {
            header.push_str(",eps_inf_v,eta_inf_v,eta_inf_v_percent");
        }
        header.push_str(",eta_inf_flux,eta_inf_flux_percent,flagged_nodes");
        writeln!(w, "{header}").map_err(io(&errors))?;
        for r in &rows {
            let mut line = format!(
                "{},{},{},{},{:e},{:e},{:e}",
                model_name(r.model),
                r.tau_hours.map(|t| t.to_string()).unwrap_or_default(),
                r.dt_hours,
                r.n_stages,
                r.u.eps_inf,
                r.u.eta_inf,
                r.u.eta_inf_percent
            );
            if let Some(v) = &r.v {
                let _ = write!(line, ",{:e},{:e},{:e}", v.eps_inf, v.eta_inf, v.eta_inf_percent);
            }
            let flagged = r.u.flagged.len() + r.v.as_ref().map_or(0, |v| v.flagged.len());
            let _ = write!(line, ",{:e},{:e},{}", r.flux_eta_inf, 100.0 * r.flux_eta_inf, flagged);
            writeln!(w, "{line}").map_err(io(&errors))?;
        }
        w.flush().map_err(io(&errors))?;
    }
    let loads = if with_loads {
        let path = out.join("compare_loads.csv");
        let mut w = create(&path)?;
        writeln!(w, "model,tau_hours,dt_hours,window,load_j_m2").map_err(io(&path))?;
        for (i, e) in reference_loads.iter().enumerate() {
            writeln!(w, "reference,,{},{i},{e}", spec.reference_dt_hours).map_err(io(&path))?;
        }
        for r in &rows {
            for (i, e) in r.loads.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{i},{e}",
                    model_name(r.model),
                    r.tau_hours.map(|t| t.to_string()).unwrap_or_default(),
                    r.dt_hours
                )
                .map_err(io(&path))?;
            }
        }
        w.flush().map_err(io(&path))?;
        Some(path)
    } else {
        None
    };

    let mut meta = base_metadata(cfg, "compare")?;
    meta.push("reference_dt_hours", spec.reference_dt_hours);
    meta.push("reference_wall_time_s", format!("{:.6}", reference.wall));
    let days = cfg.time.horizon_hours / 24.0;
    for r in rows.iter().filter(|r| r.model == ModelKind::Arm) {
        let cm = rows
            .iter()
            .find(|c| c.model == ModelKind::Cm && c.dt_hours == r.dt_hours)
            .expect("every step has a complete-model row");
        let key = format!("tau={}.dt={}", r.tau_hours.unwrap_or(0.0), r.dt_hours);
        if let Ok(cpu) = cpu_metrics(cm.wall, r.wall, days) {
            meta.push(format!("cpu.{key}.wall_cm_s"), format!("{:.6}", cpu.wall_cm));
            meta.push(format!("cpu.{key}.wall_arm_s"), format!("{:.6}", cpu.wall_arm));
            meta.push(format!("cpu.{key}.rho_cpu_percent"), format!("{:.2}", cpu.rho_cpu));
            meta.push(format!("cpu.{key}.cm_s_per_day"), format!("{:.6e}", cpu.rho_day_cm));
            meta.push(format!("cpu.{key}.arm_s_per_day"), format!("{:.6e}", cpu.rho_day_arm));
        }
    }
    let metadata = out.join("compare_metadata.txt");
    meta.write(&metadata)?;
    Ok(CompareOutput {
        rows,
        reference_loads,
        errors,
        loads,
        metadata,
    })
}

fn model_name(m: ModelKind) -> &'static str {
    match m {
        ModelKind::Cm => "cm",
        ModelKind::Arm => "arm",
    }
}
