//! Acceptance run: every criterion prints one PASS/FAIL line with its
//! measured values and runtime.
//!
//! `cargo test -p armsim-cli --test acceptance` reports without failing the
//! build; set `ACCEPTANCE_STRICT=1` to exit non-zero when a criterion fails.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::Path;
use std::time::{Duration, Instant};

use armsim_cli::commands;
use armsim_cli::config::{ModelKind, ModelSpec, RunConfig, SignalSpec};
use armsim_cli::presets;
use armsim_core::analysis::{measurement_uncertainty, thermal_resistance_standard, SensorKind, UncertaintySpec};
use armsim_core::calibrate::{offline_calibrate, CalibrationSettings, Candidate, HeatProblem, HmProblem, Problem};
use armsim_core::empirical::{
    avg_cross_dt, avg_cross_dx, d_avg_cross_dx, FluctuationKind, FluctuationModel,
};
use armsim_core::heat::{reconstruct_trajectory, HeatArmConfig};
use armsim_core::hm::{DirichletDiffusion, HmArmConfig};
use armsim_core::integrate::{euler_step, integrate, rkl1_step, super_time_step, OdeSystem, Stepper, Trajectory};
use armsim_core::signal::BoundarySignal;
use armsim_core::units::{Field, PropertyPolynomial, SpaceGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn(&Path) -> Result<Outcome, String>;

fn main() {
    let criteria: [(&str, u64, Check); 12] = [
        ("Fourier number of the heat preset", 1, fourier_number),
        ("RKL1 with one stage equals explicit Euler", 1, single_stage),
        ("stability edges of Euler and RKL1", 10, stability_edges),
        ("steady Robin-Robin profile", 30, steady_state),
        ("zero-mean fluctuations and closed-form averages", 5, closed_forms),
        ("calibration recovers known parameters", 120, calibration_recovery),
        ("best error grows with the averaging period", 300, consistency_trend),
        ("uncoupled heat-moisture run splits into scalar runs", 30, decoupling),
        ("coupled reduced model within 2% over 30 days", 600, hm_tolerance),
        ("reduced model cheaper than complete model", 600, cpu_reduction),
        ("standard and effective thermal resistance", 60, resistance),
        ("measurement uncertainty bands", 1, uncertainty),
    ];
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let out = dir.path().join(format!("c{}", i + 1));
        std::fs::create_dir_all(&out).expect("criterion directory");
        let start = Instant::now();
        let result = check(&out);
        let elapsed = start.elapsed();
        let within = elapsed < Duration::from_secs(*limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && within, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2}. {name}: {detail} [{:.2} s, limit {limit} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}

fn cli<T>(r: Result<T, armsim_cli::CliError>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn core<T>(r: armsim_core::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn fourier_number(out: &Path) -> Result<Outcome, String> {
    let cfg = presets::heat_wall();
    let (_, meta) = cli(commands::simulate(&cfg, out))?;
    let fo: f64 = meta
        .get("fo_t")
        .ok_or("fo_t missing from metadata")?
        .parse()
        .map_err(|e| format!("fo_t: {e}"))?;
    let derived = meta.get("fo_t.derived") == Some("true");
    let rounded = (fo * 1e5).round() / 1e5;
    let deviation = (fo - 5.1e-2).abs() / 5.1e-2;
    Ok(Outcome::new(
        derived && (rounded - 5.085e-2).abs() < 1e-12 && deviation < 5e-3,
        format!("Fo_T = {fo:.4e} (derived: {derived}), {:.2}% from 5.1e-2", 100.0 * deviation),
    ))
}

fn single_stage(_: &Path) -> Result<Outcome, String> {
    let cfg = presets::heat_wall();
    let hc = cli(cfg.heat_config(48.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let y: Vec<f64> = (0..hc.grid.n_nodes()).map(|_| rng.random_range(0.9..1.1)).collect();
        let t = rng.random_range(0.0..24.0);
        let dt = rng.random_range(0.1..1.0) * hc.stable_dt();
        let a = core(euler_step(&hc, t, &y, dt))?;
        let b = core(rkl1_step(&hc, t, &y, dt, 1))?;
        for (x, z) in a.iter().zip(&b) {
            worst = worst.max((x - z).abs() / x.abs());
        }
    }
    Ok(Outcome::new(worst <= 1e-15, format!("max relative difference {worst:.1e} over 10 states")))
}

fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn stability_edges(_: &Path) -> Result<Outcome, String> {
    let grid = core(SpaceGrid::from_spacing(1e-2))?;
    let n = grid.n_nodes();
    let zero = core(BoundarySignal::constant(0.0, 0.0, 1e6))?;
    // every interior node alternates sign, loading the stiffest mode
    let initial: Vec<f64> = (0..n)
        .map(|j| if j == 0 || j == n - 1 { 0.0 } else if j % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let sys = DirichletDiffusion::linear(grid, 1.0, zero.clone(), zero, core(Field::new(initial.clone()))?);
    let dt_exp = sys.stable_dt();
    let y0 = norm2(&initial);
    let growth = |stepper: Stepper, steps: f64| -> Result<f64, String> {
        let horizon = steps * stepper.dt();
        match sys.run(stepper, horizon, usize::MAX) {
            Ok(traj) => Ok(norm2(traj.final_state()) / y0),
            Err(e) if e.is_divergence() => Ok(f64::INFINITY),
            Err(e) => Err(e.to_string()),
        }
    };
    let below = growth(Stepper::Euler { dt: 0.99 * dt_exp }, 1e3)?;
    let above = growth(Stepper::Euler { dt: 1.01 * dt_exp }, 1e3)?;
    let mut pass = below <= 1.0 + 1e-12 && above > 1e3;
    let mut detail = format!("Euler growth {below:.3e} at 0.99, {above:.3e} at 1.01");
    for s in [2, 5, 10] {
        let dt = super_time_step(s, dt_exp);
        let g = growth(Stepper::Rkl1 { dt, n_stages: Some(s) }, 1e3)?;
        pass &= g <= 1.0 + 1e-12;
        detail.push_str(&format!("; RKL1 N_S={s} growth {g:.3e}"));
    }
    Ok(Outcome::new(pass, detail))
}

fn steady_state(_: &Path) -> Result<Outcome, String> {
    let cfg = presets::heat_wall();
    let mut hc = cli(cfg.heat_config(24.0))?;
    let (ul, ur) = (1.05, 0.95);
    let horizon = 1000.0;
    hc.bc_left = core(BoundarySignal::constant(ul, 0.0, horizon))?;
    hc.bc_right = core(BoundarySignal::constant(ur, 0.0, horizon))?;
    hc.bc_rad = None;
    let traj = core(hc.run(Stepper::Rkl1 { dt: 1.0, n_stages: None }, horizon, usize::MAX))?;

    // Kirchhoff potential K(u) = ∫k du makes the steady flux q uniform:
    // K(u(x)) = K(u(0)) − q·x, u(0) = u_L − q/Bi_L, u(1) = u_R + q/Bi_R.
    let (k0, k1) = (hc.k_poly.a0, hc.k_poly.a1);
    let kirchhoff = |u: f64| k0 * u + 0.5 * k1 * u * u;
    let inverse = |k: f64| (-k0 + (k0 * k0 + 2.0 * k1 * k).sqrt()) / k1;
    let residual = |q: f64| kirchhoff(ur + q / hc.bi_right) - kirchhoff(ul - q / hc.bi_left) + q;
    let (mut lo, mut hi) = (-10.0, 10.0);
    if residual(lo) * residual(hi) > 0.0 {
        return Err("flux bracket does not change sign".into());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(lo) * residual(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let k_left = kirchhoff(ul - q / hc.bi_left);
    let worst = hc
        .grid
        .nodes()
        .zip(traj.final_state())
        .map(|(x, u)| (u - inverse(k_left - q * x)).abs())
        .fold(0.0, f64::max);
    Ok(Outcome::new(worst < 1e-6, format!("max nodal error {worst:.2e} after {horizon} h (flux q = {q:.6e})")))
}

/// Independent profile formulas: (φ, φ′, φ″).
fn oracle_profile(kind: FluctuationKind, p: &[f64], x: f64) -> (f64, f64, f64) {
    let expo = |a: f64, xo: f64, l: f64| {
        let phi = a * (-(x - xo) / l).exp();
        (phi, -phi / l, phi / (l * l))
    };
    match kind {
        FluctuationKind::HeatI => (p[0] * (1.0 - x / p[1]), -p[0] / p[1], 0.0),
        FluctuationKind::HeatII | FluctuationKind::HmUII => expo(1.0, p[0], p[1]),
        FluctuationKind::HmV | FluctuationKind::HmUI => {
            let z = x / p[3];
            (
                p[0] + p[1] * z.cos() + p[2] * z.sin(),
                (p[2] * z.cos() - p[1] * z.sin()) / p[3],
                -(p[1] * z.cos() + p[2] * z.sin()) / (p[3] * p[3]),
            )
        }
        FluctuationKind::HmUIII => {
            let a = expo(p[0], p[1], p[2]);
            let b = expo(p[3], p[4], p[5]);
            (a.0 + b.0, a.1 + b.1, a.2 + b.2)
        }
    }
}

fn closed_forms(_: &Path) -> Result<Outcome, String> {
    let tau = 12.0;
    let mut models = Vec::new();
    for kind in FluctuationKind::ALL {
        let extra = match kind {
            FluctuationKind::HeatI => vec![2e-2, 0.7],
            FluctuationKind::HeatII => vec![-3.0, 0.5],
            FluctuationKind::HmV => vec![1e-3, 2e-3, -1.5e-3, 0.4],
            FluctuationKind::HmUI => vec![2e-3, -1e-3, 3e-3, 0.6],
            FluctuationKind::HmUII => vec![-2.0, 0.8],
            FluctuationKind::HmUIII => vec![3e-3, 0.1, 0.3, -2e-3, 0.2, 0.15],
        };
        for p in [kind.default_params(), extra] {
            models.push(core(FluctuationModel::new(kind, p, tau))?);
        }
    }
    let n = 10_000;
    let h = tau / n as f64;
    let w = TAU / tau;
    // trapezoid rule over one period; periodic integrands make the end
    // points coincide, so the rule is a plain average of n samples
    let mean = |f: &dyn Fn(f64) -> f64| (0..n).map(|i| f(i as f64 * h)).sum::<f64>() / n as f64;
    let positions: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();

    let mut worst_mean: f64 = 0.0;
    let mut worst_product: f64 = 0.0;
    for m in &models {
        for &x in &positions {
            worst_mean = worst_mean.max(mean(&|t| m.eval(x, t)).abs());
        }
    }
    for a in &models {
        for b in &models {
            for &x in &positions {
                let (fa, da, _) = oracle_profile(a.kind(), a.params(), x);
                let (fb, db, d2b) = oracle_profile(b.kind(), b.params(), x);
                let s = |t: f64| (w * t).sin();
                let checks = [
                    (
                        core(avg_cross_dx(a, b, x))?,
                        mean(&|t| fa * s(t) * db * s(t)),
                        (fa * db).abs(),
                    ),
                    (
                        core(d_avg_cross_dx(a, b, x))?,
                        mean(&|t| (da * db + fa * d2b) * s(t) * s(t)),
                        (da * db).abs() + (fa * d2b).abs(),
                    ),
                    (
                        core(avg_cross_dt(a, b, x))?,
                        mean(&|t| fa * s(t) * fb * w * (w * t).cos()),
                        (fa * fb * w).abs(),
                    ),
                ];
                for (closed, quad, scale) in checks {
                    if scale > 0.0 {
                        worst_product = worst_product.max((closed - quad).abs() / scale);
                    } else {
                        worst_product = worst_product.max(closed.abs());
                    }
                }
                if std::ptr::eq(a, b) {
                    let checks = [
                        (a.avg_self_dx(x), mean(&|t| fa * s(t) * da * s(t)), (fa * da).abs()),
                        (a.avg_self_dt(x), mean(&|t| fa * s(t) * fa * w * (w * t).cos()), (fa * fa * w).abs()),
                    ];
                    for (closed, quad, scale) in checks {
                        worst_product = worst_product.max((closed - quad).abs() / scale.max(f64::MIN_POSITIVE));
                    }
                }
            }
        }
    }
    Ok(Outcome::new(
        worst_mean < 1e-12 && worst_product < 1e-8,
        format!(
            "{} models at 11 positions: max |period mean| {worst_mean:.1e}, max scaled closed-form gap {worst_product:.1e}",
            models.len()
        ),
    ))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn calibration_recovery(_: &Path) -> Result<Outcome, String> {
    // heat: reference generated by the reduced model itself
    let cfg = presets::heat_wall();
    let horizon_h = 48.0;
    let hc = cli(cfg.heat_config(horizon_h))?;
    let tau = cfg.t(12.0);
    let truth = vec![-3.0, 0.5];
    let model = core(FluctuationModel::new(FluctuationKind::HeatII, truth.clone(), tau))?;
    let arm = core(HeatArmConfig::from_complete(&hc, model.clone()))?;
    let dt = cfg.t(1.0);
    let bar = core(arm.run(Stepper::Rkl1 { dt, n_stages: None }, cfg.t(horizon_h), 1))?;
    let reference = reconstruct_trajectory(&hc.grid, &bar, &model);
    let problem = Problem::Heat(core(HeatProblem::new(hc, reference, dt, cfg.t(horizon_h)))?);
    let mut settings = CalibrationSettings::new(vec![Candidate::Heat(FluctuationKind::HeatII)], vec![tau]);
    settings.seed = 1;
    let result = core(offline_calibrate(&problem, &settings))?;
    let heat_gap = max_gap(&result.cells[0].params, &truth);

    // coupled: HmUII temperature model with HmV moisture model
    let cfg = presets::rammed_earth_wall();
    let horizon_h = 72.0;
    let hm = cli(cfg.hm_config(horizon_h))?;
    let tau = cfg.t(6.0);
    let (u_truth, v_truth) = (vec![-3.0, 0.5], vec![2e-3, 1e-3, -1e-3, 0.5]);
    let um = core(FluctuationModel::new(FluctuationKind::HmUII, u_truth.clone(), tau))?;
    let vm = core(FluctuationModel::new(FluctuationKind::HmV, v_truth.clone(), tau))?;
    let arm = core(HmArmConfig::from_complete(&hm, um, vm))?;
    let dt = cfg.t(1.0);
    let bar = core(arm.run(Stepper::Rkl1 { dt, n_stages: None }, cfg.t(horizon_h), 1))?;
    let reference = arm.reconstruct_trajectory(&bar);
    let problem = Problem::Hm(core(HmProblem::new(hm, reference, dt, cfg.t(horizon_h)))?);
    let candidate = Candidate::Hm {
        u: FluctuationKind::HmUII,
        v: FluctuationKind::HmV,
    };
    let truth: Vec<f64> = u_truth.iter().chain(&v_truth).cloned().collect();
    // (v₂, x_v) and (−v₂, −x_v) give the same profile; start on the branch of the truth
    let start: Vec<f64> = truth.iter().map(|p| 1.1 * p).collect();
    let mut settings = CalibrationSettings::new(vec![candidate], vec![tau]);
    settings.initial = vec![Some(start)];
    settings.n_starts = 3;
    settings.spread = 0.1;
    settings.seed = 1;
    let result = core(offline_calibrate(&problem, &settings))?;
    let hm_gap = max_gap(&result.cells[0].params, &truth);

    Ok(Outcome::new(
        heat_gap < 1e-3 && hm_gap < 1e-3,
        format!("HeatII ‖P̂−P‖∞ = {heat_gap:.1e}; HmUII+HmV ‖P̂−P‖∞ = {hm_gap:.1e}"),
    ))
}

fn read_rows(path: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty table")?.split(',').collect();
    Ok(lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect())
}

fn number(row: &BTreeMap<String, String>, key: &str) -> Result<f64, String> {
    row.get(key)
        .ok_or_else(|| format!("column {key} missing"))?
        .parse()
        .map_err(|e| format!("{key}: {e}"))
}

fn consistency_trend(out: &Path) -> Result<Outcome, String> {
    let cfg = presets::heat_wall();
    let (files, _) = cli(commands::calibrate(&cfg, out))?;
    let mut best: BTreeMap<u64, f64> = BTreeMap::new();
    for (_, path) in &files.tables {
        for row in read_rows(path)? {
            let tau = number(&row, "tau_hours")? as u64;
            let e = number(&row, "eps2")?;
            let slot = best.entry(tau).or_insert(f64::INFINITY);
            *slot = slot.min(e);
        }
    }
    let values: Vec<f64> = best.values().cloned().collect();
    let increasing = values.len() == 4 && values.windows(2).all(|w| w[0] < w[1]);
    let listing: Vec<String> = best.iter().map(|(t, e)| format!("τ={t} h: {e:.4}")).collect();
    Ok(Outcome::new(increasing, format!("best ε₂ {}", listing.join(", "))))
}

fn decoupling(_: &Path) -> Result<Outcome, String> {
    let cfg = presets::rammed_earth_wall();
    let steps = 1000.0;
    let dt = cfg.t(1.0);
    let mut hm = cli(cfg.hm_config(steps + 1.0))?;
    hm.gamma = 0.0;
    hm.delta = 0.0;
    // properties of the temperature equation must not depend on moisture
    hm.c_poly = PropertyPolynomial::constant(1.3);
    hm.k_poly = PropertyPolynomial::constant(2.2);
    let s = 40;
    let stepper = Stepper::Rkl1 { dt, n_stages: Some(s) };
    let coupled = core(hm.run(stepper, steps * dt, 1))?;

    let heat = DirichletDiffusion {
        grid: hm.grid,
        fo: hm.fo_t,
        c_poly: hm.c_poly,
        k_poly: hm.k_poly,
        left: hm.u_left.clone(),
        right: hm.u_right.clone(),
        initial: hm.initial_u.clone(),
        range: hm.range_u,
    };
    let moisture = DirichletDiffusion {
        grid: hm.grid,
        fo: hm.fo_m,
        c_poly: PropertyPolynomial::constant(1.0),
        k_poly: hm.d_poly,
        left: hm.v_left.clone(),
        right: hm.v_right.clone(),
        initial: hm.initial_v.clone(),
        range: hm.range_v,
    };
    for sys in [&heat, &moisture] {
        if super_time_step(s, sys.stable_dt()) < dt {
            return Err("stage count too small for the scalar runs".into());
        }
    }
    let u: Trajectory = core(integrate(&heat, heat.initial.values(), 0.0, steps * dt, stepper, 1))?;
    let v: Trajectory = core(integrate(&moisture, moisture.initial.values(), 0.0, steps * dt, stepper, 1))?;
    let n = hm.grid.n_nodes();
    let mut worst: f64 = 0.0;
    for ((y, a), b) in coupled.states.iter().zip(&u.states).zip(&v.states) {
        worst = worst.max(max_gap(&y[..n], a)).max(max_gap(&y[n..], b));
    }
    Ok(Outcome::new(
        coupled.states.len() == 1001 && worst <= 1e-12,
        format!("max per-step difference {worst:.1e} over {} steps", coupled.states.len() - 1),
    ))
}

fn hm_tolerance(out: &Path) -> Result<Outcome, String> {
    let mut cfg = presets::rammed_earth_wall();
    if let Some(c) = cfg.calibrate.as_mut() {
        c.u_candidates = vec![FluctuationKind::HmUII];
    }
    let (files, _) = cli(commands::calibrate(&cfg, &out.join("calibration")))?;
    let table = &files.tables[0].1;
    let row = read_rows(table)?.into_iter().next().ok_or("empty calibration table")?;
    let names = ["u:x_o", "u:l_o", "v:v0", "v:v1", "v:v2", "v:x_v"];
    let p: Vec<f64> = names.iter().map(|k| number(&row, k)).collect::<Result<_, _>>()?;

    cfg.time.horizon_hours = 30.0 * 24.0;
    cfg.time.output_every_hours = 1.0;
    let arm = cfg.arm.as_mut().ok_or("preset lacks [arm]")?;
    arm.tau_hours = 6.0;
    arm.u = ModelSpec {
        kind: FluctuationKind::HmUII,
        params: Some(p[..2].to_vec()),
    };
    arm.v = Some(ModelSpec {
        kind: FluctuationKind::HmV,
        params: Some(p[2..].to_vec()),
    });
    let compare = cfg.compare.as_mut().ok_or("preset lacks [compare]")?;
    compare.dt_hours = vec![1.0, 2.0, 3.0, 4.0, 5.0];
    compare.tau_hours = vec![6.0];
    let result = cli(commands::compare(&cfg, &out.join("compare")))?;
    let mut pass = true;
    let mut parts = Vec::new();
    for row in result.rows.iter().filter(|r| r.model == ModelKind::Arm) {
        let eu = row.u.eta_inf_percent;
        let ev = row.v.as_ref().ok_or("moisture errors missing")?.eta_inf_percent;
        pass &= eu < 2.0 && ev < 2.0;
        parts.push(format!("Δt={} h: u {eu:.2}%, v {ev:.2}%", row.dt_hours));
    }
    pass &= parts.len() == 5;
    Ok(Outcome::new(pass, format!("η∞ {}", parts.join("; "))))
}

fn min_wall(cfg: &RunConfig, out: &Path) -> Result<(f64, f64), String> {
    let mut best = (f64::INFINITY, f64::INFINITY);
    for rep in 0..3 {
        for (slot, model) in [ModelKind::Cm, ModelKind::Arm].into_iter().enumerate() {
            let mut c = cfg.clone();
            c.model = model;
            let (_, meta) = cli(commands::simulate(&c, &out.join(format!("{rep}-{slot}"))))?;
            let wall: f64 = meta
                .get("wall_time_s")
                .ok_or("wall time missing")?
                .parse()
                .map_err(|e| format!("wall time: {e}"))?;
            if slot == 0 {
                best.0 = best.0.min(wall);
            } else {
                best.1 = best.1.min(wall);
            }
        }
    }
    Ok(best)
}

fn cpu_reduction(out: &Path) -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, mut cfg) in [("heat-2.4", presets::heat_wall()), ("re-wall-3.4", presets::rammed_earth_wall())] {
        cfg.time.horizon_hours = 365.0 * 24.0;
        cfg.time.dt_hours = 1.0;
        cfg.time.output_every_hours = 24.0;
        let (cm, arm) = min_wall(&cfg, &out.join(name))?;
        let rho = 100.0 * arm / cm;
        pass &= rho < 100.0;
        parts.push(format!("{name}: CM {cm:.3} s, ARM {arm:.3} s, ρ_CPU {rho:.1}%"));
    }
    Ok(Outcome::new(pass, format!("365 d at Δt = 1 h, min of 3: {}", parts.join("; "))))
}

fn resistance(out: &Path) -> Result<Outcome, String> {
    let mut cfg = presets::rammed_earth_wall();
    let s = cfg.scales;
    let hm = cfg.hm.as_mut().ok_or("preset lacks [hm]")?;
    // physical k_T(θ) = k°·k*(θ/θᵢ)
    let k_physical = PropertyPolynomial::new(s.k_ref * hm.k.a0, s.k_ref * hm.k.a1 / s.moisture_ref);
    let r0 = core(thermal_resistance_standard(s.length_ref, &k_physical))?;

    hm.initial_v = 0.0;
    hm.initial_u = 1.0;
    let celsius = |c: f64| (c + 273.15) / s.temp_ref;
    cfg.boundary = BTreeMap::from([
        ("u_left".to_string(), SignalSpec::Constant { value: celsius(20.0) }),
        ("u_right".to_string(), SignalSpec::Constant { value: celsius(10.0) }),
        ("v_left".to_string(), SignalSpec::Constant { value: 0.0 }),
        ("v_right".to_string(), SignalSpec::Constant { value: 0.0 }),
    ]);
    cfg.time.horizon_hours = 30.0 * 24.0;
    cfg.time.output_every_hours = 1.0;
    cfg.model = ModelKind::Cm;
    cli(commands::simulate(&cfg, out))?;
    let rows = read_rows(&out.join("resistance.csv"))?;
    let last = rows.last().ok_or("no resistance windows")?;
    let r = number(last, "r_m2k_w")?;
    let deviation = (r - r0).abs() / r0;
    Ok(Outcome::new(
        r0 == 0.5 && deviation < 1e-2,
        format!("R₀ = {r0} m²K/W, effective R = {r:.6} m²K/W ({:.3}% off)", 100.0 * deviation),
    ))
}

fn uncertainty(_: &Path) -> Result<Outcome, String> {
    let spec = UncertaintySpec::default();
    let t = core(measurement_uncertainty(&[20.0], SensorKind::Temperature, &spec, &[0.0]))?[0].sigma;
    let m = core(measurement_uncertainty(&[0.4], SensorKind::Moisture, &spec, &[0.0]))?[0].sigma;
    let mut monotone = true;
    for (kind, value, gradient) in [(SensorKind::Temperature, 20.0, 15.0), (SensorKind::Moisture, 0.4, 0.3)] {
        let mut last = 0.0;
        for i in 0..=20 {
            let spec = UncertaintySpec {
                placement_dx: i as f64 * 1e-3,
                ..spec
            };
            let sigma = core(measurement_uncertainty(&[value], kind, &spec, &[gradient]))?[0].sigma;
            monotone &= sigma > last;
            last = sigma;
        }
    }
    Ok(Outcome::new(
        (t - 0.3).abs() <= 1e-12 && (m - 0.01).abs() <= 1e-12 && monotone,
        format!("σ = {t} °C at 20 °C, σ = {m} at θ = 0.4, increasing in Δx_P: {monotone}"),
    ))
}
