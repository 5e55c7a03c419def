//! Shipped case-study configurations.

use std::collections::BTreeMap;

use armsim_core::empirical::FluctuationKind;
use armsim_core::signal::{SynthWeather, ValueUnit};
use armsim_core::units::{AdmissibleRange, PhysicalConstants, PropertyPolynomial, ReferenceScales};

use crate::config::*;
use crate::CliError;

pub const NAMES: [&str; 2] = ["heat-2.4", "re-wall-3.4"];

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    match name {
        "heat-2.4" => Ok(heat_wall()),
        "re-wall-3.4" => Ok(rammed_earth_wall()),
        other => Err(CliError::Config(format!(
            "unknown preset `{other}`; available: {}",
            NAMES.join(", ")
        ))),
    }
}

/// Single-layer wall, Robin boundaries, outdoor weather on the left and a
/// slow indoor sinusoid on the right.
pub fn heat_wall() -> RunConfig {
    let scales = ReferenceScales {
        t_ref: 3600.0,
        temp_ref: 293.15,
        length_ref: 0.2,
        c_ref: 2e6,
        k_ref: 1.13,
        moisture_ref: 1.0,
        d_theta_ref: 1.0,
    };
    let mut boundary = BTreeMap::new();
    boundary.insert(
        "left".to_string(),
        SignalSpec::Synth(SynthWeather {
            unit: ValueUnit::Celsius,
            mean: 12.0,
            annual_amplitude: 8.0,
            annual_phase: 0.0,
            diurnal_amplitude: 3.0,
            // daily maximum near 15:00
            diurnal_phase: 0.375,
            // synoptic-scale variability, correlation time about two days
            noise_amplitude: 4.0,
            noise_correlation: 0.98,
            start: None,
            relaxation_hours: 0.0,
        }),
    );
    boundary.insert(
        "right".to_string(),
        SignalSpec::Sine {
            mean: 1.0,
            amplitude: 1.4e-2,
            period: 1.92e4,
        },
    );
    RunConfig {
        problem: ProblemKind::Heat,
        model: ModelKind::Cm,
        seed: 2024,
        jobs: 1,
        scales,
        grid: GridSpec { dx: 1e-2 },
        time: TimeSpec {
            horizon_hours: 120.0,
            dt_hours: 1.0,
            scheme: Scheme::Rkl1,
            stages: None,
            output_every_hours: 1.0,
        },
        heat: Some(HeatSpec {
            fo: None,
            bi_left: 2.65,
            bi_right: 1.42,
            alpha: 0.0,
            c: PropertyPolynomial::new(0.2, 0.1),
            k: PropertyPolynomial::new(0.051, 0.01),
            initial: PropertyPolynomial::new(0.95, 4.5e-2),
            range: AdmissibleRange::TEMPERATURE,
        }),
        hm: None,
        boundary,
        arm: Some(ArmSpec {
            tau_hours: 12.0,
            u: ModelSpec {
                kind: FluctuationKind::HeatII,
                params: Some(vec![-2.44, 0.330]),
            },
            v: None,
            params_file: None,
        }),
        calibrate: Some(CalibrateSpec {
            tau_hours: vec![6.0, 12.0, 24.0, 48.0],
            horizon_hours: 120.0,
            u_candidates: vec![FluctuationKind::HeatI, FluctuationKind::HeatII],
            v_candidate: None,
            initial: BTreeMap::new(),
            starts: 5,
            spread: 0.5,
            dt_hours: None,
            sensors: None,
            bound: 1e3,
            max_iter: 100,
        }),
        compare: Some(CompareSpec {
            dt_hours: vec![1.0, 5.0, 25.0],
            tau_hours: vec![12.0],
            reference_dt_hours: 1.0,
            loads_window_hours: 720.0,
            resistance_window_hours: 24.0,
        }),
    }
}

/// Rammed-earth wall with Dirichlet data at the sensor planes.
pub fn rammed_earth_wall() -> RunConfig {
    let k = PhysicalConstants::RAMMED_EARTH;
    let (theta_i, temp_i, length) = (0.53, 300.15, 0.3);
    // D_θ = 1e-7 + 2.4e-9·(θ − 0.1), k_T = 0.6 + 5θ, c_T = ρ₀c₀ + ρ₂c₂θ
    let (d_ref, k_ref, c_ref) = (1e-7, 0.6, k.rho0 * k.c0_dry);
    let scales = ReferenceScales {
        t_ref: 3600.0,
        temp_ref: temp_i,
        length_ref: length,
        c_ref,
        k_ref,
        moisture_ref: theta_i,
        d_theta_ref: d_ref,
    };
    let d = PropertyPolynomial::shifted(1.0, 2.4e-9 * theta_i / d_ref, 0.1 / theta_i);
    let c = PropertyPolynomial::new(1.0, k.rho2 * k.c2 * theta_i / c_ref);
    let kt = PropertyPolynomial::new(1.0, 5.0 * theta_i / k_ref);

    // sensor planes start at the uniform state of the freshly built wall
    let t_i = temp_i - 273.15;
    let synth = |unit, mean, annual, diurnal, noise, start, relax| {
        SignalSpec::Synth(SynthWeather {
            unit,
            mean,
            annual_amplitude: annual,
            // runs start in July, near the annual maximum
            annual_phase: -0.25,
            diurnal_amplitude: diurnal,
            diurnal_phase: 0.3,
            noise_amplitude: noise,
            noise_correlation: 0.9,
            start: Some(start),
            relaxation_hours: relax,
        })
    };
    let mut boundary = BTreeMap::new();
    boundary.insert("u_left".to_string(), synth(ValueUnit::Celsius, 17.0, 7.0, 1.5, 0.1, t_i, 48.0));
    boundary.insert("u_right".to_string(), synth(ValueUnit::Celsius, 20.0, 3.0, 0.3, 0.03, t_i, 48.0));
    boundary.insert("v_left".to_string(), synth(ValueUnit::Moisture, 0.35, 0.03, 3e-3, 5e-4, theta_i, 720.0));
    boundary.insert("v_right".to_string(), synth(ValueUnit::Moisture, 0.32, 0.02, 1e-3, 2e-4, theta_i, 720.0));

    let mut initial = BTreeMap::new();
    initial.insert("hm-v".to_string(), vec![1e-3, 1e-3, 1e-3, 0.5]);
    RunConfig {
        problem: ProblemKind::Hm,
        model: ModelKind::Cm,
        seed: 2024,
        jobs: 1,
        scales,
        grid: GridSpec { dx: 1e-2 },
        time: TimeSpec {
            horizon_hours: 730.0 * 24.0,
            dt_hours: 1.0,
            scheme: Scheme::Rkl1,
            stages: None,
            output_every_hours: 24.0,
        },
        heat: None,
        hm: Some(HmSpec {
            d,
            c,
            k: kt,
            d_t: 1.0,
            k_tm: 1.0,
            initial_u: 1.0,
            initial_v: 1.0,
            range_u: AdmissibleRange::TEMPERATURE,
            range_v: AdmissibleRange::MOISTURE,
            physical: HmPhysical {
                d_t: 1e-10,
                k_tm: 4e-18,
                latent_heat: k.latent_heat,
            },
            fo_m: None,
            fo_t: None,
            gamma: None,
            delta: None,
        }),
        boundary,
        arm: Some(ArmSpec {
            tau_hours: 6.0,
            u: ModelSpec {
                kind: FluctuationKind::HmUII,
                params: Some(FluctuationKind::HmUII.zero_params()),
            },
            v: Some(ModelSpec {
                kind: FluctuationKind::HmV,
                params: Some(FluctuationKind::HmV.zero_params()),
            }),
            params_file: None,
        }),
        calibrate: Some(CalibrateSpec {
            tau_hours: vec![6.0],
            horizon_hours: 240.0,
            u_candidates: vec![FluctuationKind::HmUI, FluctuationKind::HmUII, FluctuationKind::HmUIII],
            v_candidate: Some(FluctuationKind::HmV),
            initial,
            starts: 5,
            spread: 0.5,
            dt_hours: None,
            sensors: None,
            bound: 1e3,
            max_iter: 100,
        }),
        compare: Some(CompareSpec {
            dt_hours: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            tau_hours: vec![6.0],
            reference_dt_hours: 1.0,
            loads_window_hours: 720.0,
            resistance_window_hours: 24.0,
        }),
    }
}
