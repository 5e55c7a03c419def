//! Run configuration: a sectioned TOML document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use armsim_core::empirical::{FluctuationKind, FluctuationModel};
use armsim_core::heat::HeatConfig;
use armsim_core::hm::{HmConfig, HmGroups};
use armsim_core::integrate::{stages_for, super_time_step, OdeSystem, Stepper, MAX_STAGES};
use armsim_core::signal::{load_series, synth_weather, AveragingSpec, BoundarySignal, SynthWeather, ValueUnit};
use armsim_core::units::{fourier_number_heat, AdmissibleRange, Field, PropertyPolynomial, ReferenceScales, SpaceGrid};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Heat,
    Hm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Cm,
    Arm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Rkl1,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub jobs: usize,
    pub scales: ReferenceScales,
    pub grid: GridSpec,
    pub time: TimeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat: Option<HeatSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hm: Option<HmSpec>,
    /// Heat: `left`, `right`, optional `radiation`. Coupled: `u_left`,
    /// `u_right`, `v_left`, `v_right`.
    pub boundary: BTreeMap<String, SignalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<ArmSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Dimensionless node spacing; `1/dx` must be an integer.
    pub dx: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub horizon_hours: f64,
    pub dt_hours: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Fixed RKL1 stage count; chosen from the stability bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    #[serde(default = "one_f")]
    pub output_every_hours: f64,
}

fn one_f() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatSpec {
    /// Derived from the scales when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fo: Option<f64>,
    pub bi_left: f64,
    pub bi_right: f64,
    #[serde(default)]
    pub alpha: f64,
    pub c: PropertyPolynomial,
    pub k: PropertyPolynomial,
    /// `u₀(x) = a0 + a1·(x − shift)`.
    pub initial: PropertyPolynomial,
    #[serde(default = "temperature_range")]
    pub range: AdmissibleRange,
}

fn temperature_range() -> AdmissibleRange {
    AdmissibleRange::TEMPERATURE
}

fn moisture_range() -> AdmissibleRange {
    AdmissibleRange::MOISTURE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmSpec {
    pub d: PropertyPolynomial,
    pub c: PropertyPolynomial,
    pub k: PropertyPolynomial,
    #[serde(default = "one_f")]
    pub d_t: f64,
    #[serde(default = "one_f")]
    pub k_tm: f64,
    pub initial_u: f64,
    pub initial_v: f64,
    #[serde(default = "temperature_range")]
    pub range_u: AdmissibleRange,
    #[serde(default = "moisture_range")]
    pub range_v: AdmissibleRange,
    pub physical: HmPhysical,
    /// Overrides for the derived groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fo_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fo_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

/// Dimensional coefficients used for the derived groups and flux output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmPhysical {
    /// D_T [kg/(m s K)]
    pub d_t: f64,
    /// k_TM
    pub k_tm: f64,
    /// L₁₂ [J/kg]
    pub latent_heat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SignalSpec {
    /// Dimensionless constant.
    Constant { value: f64 },
    /// Dimensionless `mean + amplitude·sin(2π·t/period)`, `t` and `period` in
    /// dimensionless time.
    Sine { mean: f64, amplitude: f64, period: f64 },
    /// Seeded synthetic hourly series.
    Synth(SynthWeather),
    /// Two-column CSV `time_hours,value`.
    File { path: PathBuf, unit: ValueUnit },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: FluctuationKind,
    /// Inline parameters; otherwise read from `params_file` at `tau_hours`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmSpec {
    pub tau_hours: f64,
    /// Heat model, or the temperature model of the coupled problem.
    pub u: ModelSpec,
    /// Moisture model of the coupled problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<ModelSpec>,
    /// Calibration table written by `calibrate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSpec {
    pub tau_hours: Vec<f64>,
    pub horizon_hours: f64,
    /// Heat kinds, or temperature kinds of the coupled problem.
    pub u_candidates: Vec<FluctuationKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_candidate: Option<FluctuationKind>,
    /// Initial guesses keyed by kind name.
    #[serde(default)]
    pub initial: BTreeMap<String, Vec<f64>>,
    #[serde(default = "five")]
    pub starts: usize,
    #[serde(default = "half")]
    pub spread: f64,
    /// Step of the reduced runs; defaults to `time.dt_hours`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_hours: Option<f64>,
    /// Node indices entering the residual; all nodes when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<Vec<usize>>,
    #[serde(default = "bound")]
    pub bound: f64,
    #[serde(default = "hundred")]
    pub max_iter: usize,
}

fn five() -> usize {
    5
}

fn half() -> f64 {
    0.5
}

fn bound() -> f64 {
    1e3
}

fn hundred() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    /// Steps swept for both models.
    pub dt_hours: Vec<f64>,
    /// Averaging periods swept for the reduced model.
    pub tau_hours: Vec<f64>,
    /// Step of the complete-model reference.
    pub reference_dt_hours: f64,
    #[serde(default = "month")]
    pub loads_window_hours: f64,
    #[serde(default = "day")]
    pub resistance_window_hours: f64,
}

fn month() -> f64 {
    720.0
}

fn day() -> f64 {
    24.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    fn resolve_paths(&mut self, base: &Path) {
        for spec in self.boundary.values_mut() {
            if let SignalSpec::File { path, .. } = spec {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        if let Some(arm) = &mut self.arm {
            if let Some(p) = &mut arm.params_file {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }

    fn hours(&self) -> f64 {
        self.scales.t_ref / 3600.0
    }

    /// Dimensionless time for a duration in hours.
    pub fn t(&self, hours: f64) -> f64 {
        hours / self.hours()
    }

    pub fn stepper(&self, dt_hours: f64) -> Stepper {
        let dt = self.t(dt_hours);
        match self.time.scheme {
            Scheme::Euler => Stepper::Euler { dt },
            Scheme::Rkl1 => Stepper::Rkl1 { dt, n_stages: self.time.stages },
        }
    }

    /// Snapshot stride in steps.
    pub fn stride(&self, dt_hours: f64) -> Result<usize, CliError> {
        let ratio = self.time.output_every_hours / dt_hours;
        let m = ratio.round();
        if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(CliError::Config(format!(
                "output interval {} h is not a positive multiple of the step {} h",
                self.time.output_every_hours, dt_hours
            )));
        }
        Ok(m as usize)
    }

    fn grid(&self) -> Result<SpaceGrid, CliError> {
        Ok(SpaceGrid::from_spacing(self.grid.dx)?)
    }

    fn signal(&self, key: &str, index: u64, span_hours: f64) -> Result<BoundarySignal, CliError> {
        let spec = self
            .boundary
            .get(key)
            .ok_or_else(|| CliError::Config(format!("missing boundary signal `{key}`")))?;
        let spacing = self.t(1.0);
        let count = span_hours.ceil().max(1.0) as usize + 1;
        let signal = match spec {
            SignalSpec::Constant { value } => BoundarySignal::from_fn(spacing, count, |_| *value)?,
            SignalSpec::Sine { mean, amplitude, period } => {
                if !(*period > 0.0) {
                    return Err(CliError::Config(format!("boundary `{key}`: period must be positive")));
                }
                let w = std::f64::consts::TAU / period;
                BoundarySignal::from_fn(spacing, count, |t| mean + amplitude * (w * t).sin())?
            }
            SignalSpec::Synth(weather) => {
                let days = (span_hours / 24.0).ceil().max(1.0) as usize;
                synth_weather(self.seed.wrapping_add(index), days, weather, &self.scales)?
            }
            SignalSpec::File { path, unit } => {
                if !path.exists() {
                    return Err(CliError::Config(format!("boundary `{key}`: file {} does not exist", path.display())));
                }
                load_series(path, *unit, &self.scales)?
            }
        };
        Ok(signal)
    }

    fn heat_spec(&self) -> Result<&HeatSpec, CliError> {
        self.heat
            .as_ref()
            .ok_or_else(|| CliError::Config("problem = \"heat\" needs a [heat] section".into()))
    }

    fn hm_spec(&self) -> Result<&HmSpec, CliError> {
        self.hm
            .as_ref()
            .ok_or_else(|| CliError::Config("problem = \"hm\" needs a [hm] section".into()))
    }

    /// Fourier number in use and whether it was derived from the scales.
    pub fn heat_fo(&self) -> Result<(f64, bool), CliError> {
        let spec = self.heat_spec()?;
        Ok(match spec.fo {
            Some(fo) => (fo, false),
            None => (fourier_number_heat(&self.scales), true),
        })
    }

    /// Complete heat model with signals covering `span_hours`.
    pub fn heat_config(&self, span_hours: f64) -> Result<HeatConfig, CliError> {
        self.scales.validate()?;
        let spec = self.heat_spec()?;
        let grid = self.grid()?;
        let (fo, _) = self.heat_fo()?;
        let bc_rad = if self.boundary.contains_key("radiation") {
            Some(self.signal("radiation", 2, span_hours)?)
        } else {
            None
        };
        let initial = Field::from_fn(&grid, |x| spec.initial.eval(x));
        let cfg = HeatConfig {
            grid,
            fo,
            bi_left: spec.bi_left,
            bi_right: spec.bi_right,
            alpha: spec.alpha,
            c_poly: spec.c,
            k_poly: spec.k,
            bc_left: self.signal("left", 0, span_hours)?,
            bc_right: self.signal("right", 1, span_hours)?,
            bc_rad,
            initial,
            range: spec.range,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Groups in use, each flagged `true` when derived rather than configured.
    pub fn hm_groups(&self) -> Result<(HmGroups, [bool; 4]), CliError> {
        let spec = self.hm_spec()?;
        let d = HmGroups::derive(&self.scales, spec.physical.d_t, spec.physical.k_tm, spec.physical.latent_heat);
        let pick = |o: Option<f64>, v: f64| (o.unwrap_or(v), o.is_none());
        let (fo_m, a) = pick(spec.fo_m, d.fo_m);
        let (fo_t, b) = pick(spec.fo_t, d.fo_t);
        let (gamma, c) = pick(spec.gamma, d.gamma);
        let (delta, e) = pick(spec.delta, d.delta);
        Ok((HmGroups { fo_m, fo_t, gamma, delta }, [a, b, c, e]))
    }

    pub fn hm_config(&self, span_hours: f64) -> Result<HmConfig, CliError> {
        self.scales.validate()?;
        let spec = self.hm_spec()?;
        let grid = self.grid()?;
        let (g, _) = self.hm_groups()?;
        let cfg = HmConfig {
            fo_m: g.fo_m,
            fo_t: g.fo_t,
            gamma: g.gamma,
            delta: g.delta,
            d_poly: spec.d,
            c_poly: spec.c,
            k_poly: spec.k,
            d_t: spec.d_t,
            k_tm: spec.k_tm,
            u_left: self.signal("u_left", 0, span_hours)?,
            u_right: self.signal("u_right", 1, span_hours)?,
            v_left: self.signal("v_left", 2, span_hours)?,
            v_right: self.signal("v_right", 3, span_hours)?,
            initial_u: Field::constant(&grid, spec.initial_u),
            initial_v: Field::constant(&grid, spec.initial_v),
            range_u: spec.range_u,
            range_v: spec.range_v,
            grid,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every averaging period in use against the sampled signals.
    pub fn check_periods(&self, taus_hours: &[f64]) -> Result<(), CliError> {
        let span = self.time.horizon_hours.max(1.0);
        let keys: Vec<&String> = self.boundary.keys().collect();
        for (i, key) in keys.iter().enumerate() {
            let sig = self.signal(key, i as u64, span.min(48.0))?;
            for &tau in taus_hours {
                let spec = AveragingSpec::new(self.t(tau))?;
                if sig.values().iter().any(|v| *v != sig.values()[0]) {
                    spec.samples_per_window(&sig).map_err(|e| CliError::Config(format!("boundary `{key}`: {e}")))?;
                }
            }
        }
        Ok(())
    }

    /// The configured reduced models for `tau_hours`.
    pub fn arm_models(&self, tau_hours: f64) -> Result<Vec<FluctuationModel>, CliError> {
        let arm = self
            .arm
            .as_ref()
            .ok_or_else(|| CliError::Config("the reduced model needs an [arm] section".into()))?;
        let tau = self.t(tau_hours);
        let mut specs = vec![&arm.u];
        if self.problem == ProblemKind::Hm {
            specs.push(
                arm.v
                    .as_ref()
                    .ok_or_else(|| CliError::Config("coupled reduced model needs [arm.v]".into()))?,
            );
        }
        let candidate = match self.problem {
            ProblemKind::Heat => armsim_core::calibrate::Candidate::Heat(arm.u.kind),
            ProblemKind::Hm => armsim_core::calibrate::Candidate::Hm {
                u: arm.u.kind,
                v: specs[1].kind,
            },
        };
        let params: Vec<f64> = if specs.iter().all(|s| s.params.is_some()) {
            specs.iter().flat_map(|s| s.params.clone().unwrap()).collect()
        } else if let Some(path) = &arm.params_file {
            if !path.exists() {
                return Err(CliError::Config(format!("parameter file {} does not exist", path.display())));
            }
            armsim_core::calibrate::read_params(path, candidate, tau_hours)?
        } else {
            return Err(CliError::Config("reduced model needs inline params or a params_file".into()));
        };
        Ok(candidate.models(&params, tau)?)
    }

    /// RKL1 stage count for `sys` at `dt_hours`, refusing steps beyond the stage cap.
    pub fn check_stages(&self, sys: &dyn OdeSystem, dt_hours: f64) -> Result<usize, CliError> {
        let dt = self.t(dt_hours);
        match self.time.scheme {
            Scheme::Euler => {
                if dt > sys.stable_dt() * (1.0 + 1e-12) {
                    return Err(CliError::Config(format!(
                        "explicit step {dt_hours} h exceeds the stability limit {} h",
                        sys.stable_dt() * self.hours()
                    )));
                }
                Ok(1)
            }
            Scheme::Rkl1 => match self.time.stages {
                Some(s) => {
                    if s == 0 || s > MAX_STAGES {
                        return Err(CliError::Config(format!("stages must lie in 1..={MAX_STAGES}")));
                    }
                    let limit = super_time_step(s, sys.stable_dt());
                    if dt > limit * (1.0 + 1e-12) {
                        return Err(CliError::Config(format!(
                            "step {dt_hours} h exceeds the {s}-stage limit {} h",
                            limit * self.hours()
                        )));
                    }
                    Ok(s)
                }
                None => stages_for(dt, sys.stable_dt()).map_err(|_| {
                    CliError::Config(format!(
                        "step {dt_hours} h needs more than {MAX_STAGES} RKL1 stages; the limit is {} h",
                        super_time_step(MAX_STAGES, sys.stable_dt()) * self.hours()
                    ))
                }),
            },
        }
    }
}
