use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use armsim_cli::commands::{calibrate, compare, simulate};
use armsim_cli::config::{ModelKind, RunConfig, SignalSpec};
use armsim_cli::presets::{preset, NAMES};
use armsim_core::signal::ValueUnit;

fn armsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_armsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn short_heat() -> RunConfig {
    let mut cfg = preset("heat-2.4").unwrap();
    cfg.time.horizon_hours = 48.0;
    cfg
}

#[test]
fn presets_round_trip_through_toml() {
    for name in NAMES {
        let cfg = preset(name).unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back, "{name}");
    }
}

#[test]
fn preset_subcommand_prints_a_loadable_config() {
    let out = armsim(&["preset", "re-wall-3.4"]);
    assert!(out.status.success());
    let cfg = RunConfig::from_toml(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(cfg, preset("re-wall-3.4").unwrap());
}

#[test]
fn unknown_preset_is_a_usage_error() {
    let out = armsim(&["preset", "brick"]);
    assert!(!out.status.success());
}

#[test]
fn simulate_writes_fields_and_echoes_the_fourier_number() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_heat());
    let out_dir = dir.path().join("out");
    let out = armsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for f in ["trajectory.csv", "flux.csv", "final_state.csv", "metadata.txt"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let meta = std::fs::read_to_string(out_dir.join("metadata.txt")).unwrap();
    assert!(meta.lines().any(|l| l.starts_with("fo_t")), "{meta}");

    let text = std::fs::read_to_string(out_dir.join("final_state.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 101);
    for row in &rows {
        for field in row.split(',') {
            assert!(field.parse::<f64>().unwrap().is_finite());
        }
    }
}

#[test]
fn reduced_model_runs_from_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_heat());
    let out_dir = dir.path().join("arm");
    let out = armsim(&["simulate", "--arm", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = std::fs::read_to_string(out_dir.join("metadata.txt")).unwrap();
    assert!(meta.lines().any(|l| l.starts_with("model") && l.ends_with("arm")), "{meta}");
    assert!(meta.lines().any(|l| l.starts_with("n_sts") && l.ends_with("12")), "{meta}");
}

#[test]
fn missing_config_source_is_a_configuration_error() {
    let out = armsim(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_horizon_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_heat();
    cfg.time.horizon_hours = 0.0;
    let err = simulate(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("empty time span"), "{err}");
}

#[test]
fn steps_beyond_the_stage_cap_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("re-wall-3.4").unwrap();
    cfg.time.dt_hours = 240.0;
    cfg.time.horizon_hours = 480.0;
    cfg.time.output_every_hours = 240.0;
    let path = write_config(dir.path(), &cfg);
    let out = armsim(&["simulate", "--config", path.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("RKL1 stages"), "{stderr}");
}

#[test]
fn explicit_steps_beyond_the_stability_limit_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_heat();
    cfg.time.scheme = armsim_cli::config::Scheme::Euler;
    let err = simulate(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("stability limit"), "{err}");
}

#[test]
fn same_seed_reproduces_outputs_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_heat();
    let (a, _) = simulate(&cfg, &dir.path().join("a")).unwrap();
    let (b, _) = simulate(&cfg, &dir.path().join("b")).unwrap();
    for (x, y) in [(&a.trajectory, &b.trajectory), (&a.flux, &b.flux), (&a.final_state, &b.final_state)] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }

    let mut other = cfg.clone();
    other.seed += 1;
    let (c, _) = simulate(&other, &dir.path().join("c")).unwrap();
    assert_ne!(std::fs::read(&a.trajectory).unwrap(), std::fs::read(&c.trajectory).unwrap());
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &short_heat());
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = armsim(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        std::fs::read(out_dir.join("trajectory.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
    assert_eq!(run("7", "s7"), run("7", "s7b"));
}

#[test]
fn complete_model_at_the_reference_step_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_heat();
    cfg.compare.as_mut().unwrap().dt_hours = vec![1.0];
    cfg.compare.as_mut().unwrap().loads_window_hours = 24.0;
    let out = compare(&cfg, dir.path()).unwrap();
    let cm = out.rows.iter().find(|r| r.model == ModelKind::Cm).expect("cm row");
    assert_eq!(cm.u.eta_inf, 0.0);
    assert_eq!(cm.u.eps_inf, 0.0);
    assert!(out.errors.exists());
}

#[test]
fn calibration_writes_one_row_per_period() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_heat();
    let cal = cfg.calibrate.as_mut().unwrap();
    cal.horizon_hours = 48.0;
    cal.starts = 1;
    let (files, _) = calibrate(&cfg, dir.path()).unwrap();
    assert_eq!(files.tables.len(), 2);
    for (_, path) in &files.tables {
        let rows = std::fs::read_to_string(path).unwrap().lines().skip(1).count();
        assert_eq!(rows, 4, "{}", path.display());
    }
}

#[test]
fn fractional_averaging_period_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short_heat();
    cfg.model = ModelKind::Arm;
    cfg.arm.as_mut().unwrap().tau_hours = 2.5;
    let err = simulate(&cfg, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn file_boundaries_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut series = String::from("time_hours,value\n");
    for h in 0..=48 {
        series.push_str(&format!("{h},{}\n", 10.0 + (h as f64 * 0.3).sin()));
    }
    std::fs::write(dir.path().join("outdoor.csv"), series).unwrap();

    let mut cfg = short_heat();
    cfg.boundary.insert(
        "left".into(),
        SignalSpec::File {
            path: "outdoor.csv".into(),
            unit: ValueUnit::Celsius,
        },
    );
    let path = write_config(dir.path(), &cfg);
    let loaded = RunConfig::load(&path).unwrap();
    let (files, _) = simulate(&loaded, &dir.path().join("out")).unwrap();
    assert!(files.final_state.exists());

    let missing = dir.path().join("elsewhere").join("run.toml");
    std::fs::create_dir_all(missing.parent().unwrap()).unwrap();
    std::fs::write(&missing, cfg.to_toml()).unwrap();
    let err = simulate(&RunConfig::load(&missing).unwrap(), &dir.path().join("x")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("does not exist"), "{err}");
}

#[test]
fn synthetic_start_and_relaxation_survive_toml() {
    let cfg = preset("re-wall-3.4").unwrap();
    let text = cfg.to_toml();
    assert!(text.contains("relaxation_hours"));
    let back = RunConfig::from_toml(&text).unwrap();
    match (&cfg.boundary["v_left"], &back.boundary["v_left"]) {
        (SignalSpec::Synth(a), SignalSpec::Synth(b)) => {
            assert_eq!(a.start, b.start);
            assert_eq!(a.relaxation_hours, b.relaxation_hours);
        }
        _ => panic!("v_left should be synthetic"),
    }

    let heat = short_heat().to_toml();
    assert!(!heat.contains("start ="));
}
