//! Empirical fluctuation models `φ(x)·sin(2πt/τ)` and their period-averaged
//! products.
//!
//! Every candidate shares the `sin(2πt/τ)` factor, so the averages reduce to
//! `mean(sin²) = 1/2` and `mean(sin·cos) = 0` and are computed in closed form.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FluctuationKind {
    /// `(u_o, ℓ_o)`: `u_o·(1 − x/ℓ_o)`.
    #[serde(rename = "heat-i")]
    HeatI,
    /// `(x_o, ℓ_o)`: `exp(−(x − x_o)/ℓ_o)`.
    #[serde(rename = "heat-ii")]
    HeatII,
    /// `(v₀, v₁, v₂, x_v)`: `v₀ + v₁·cos(x/x_v) + v₂·sin(x/x_v)`.
    #[serde(rename = "hm-v")]
    HmV,
    /// `(u₀, u₁, u₂, x_u)`: same form as [`FluctuationKind::HmV`].
    #[serde(rename = "hm-u-i")]
    HmUI,
    /// `(x_o, ℓ_o)`: same form as [`FluctuationKind::HeatII`].
    #[serde(rename = "hm-u-ii")]
    HmUII,
    /// `(u₁, x_a, ℓ_a, u₂, x_b, ℓ_b)`: `u₁·exp(−(x − x_a)/ℓ_a) + u₂·exp(−(x − x_b)/ℓ_b)`.
    #[serde(rename = "hm-u-iii")]
    HmUIII,
}

impl FluctuationKind {
    pub const ALL: [FluctuationKind; 6] = [
        FluctuationKind::HeatI,
        FluctuationKind::HeatII,
        FluctuationKind::HmV,
        FluctuationKind::HmUI,
        FluctuationKind::HmUII,
        FluctuationKind::HmUIII,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FluctuationKind::HeatI => "heat-i",
            FluctuationKind::HeatII => "heat-ii",
            FluctuationKind::HmV => "hm-v",
            FluctuationKind::HmUI => "hm-u-i",
            FluctuationKind::HmUII => "hm-u-ii",
            FluctuationKind::HmUIII => "hm-u-iii",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FluctuationKind::HeatI => &["u_o", "l_o"],
            FluctuationKind::HeatII | FluctuationKind::HmUII => &["x_o", "l_o"],
            FluctuationKind::HmV => &["v0", "v1", "v2", "x_v"],
            FluctuationKind::HmUI => &["u0", "u1", "u2", "x_u"],
            FluctuationKind::HmUIII => &["u1", "x_a", "l_a", "u2", "x_b", "l_b"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    /// Indices of parameters that appear as divisors.
    fn divisors(self) -> &'static [usize] {
        match self {
            FluctuationKind::HeatI | FluctuationKind::HeatII | FluctuationKind::HmUII => &[1],
            FluctuationKind::HmV | FluctuationKind::HmUI => &[3],
            FluctuationKind::HmUIII => &[2, 5],
        }
    }

    /// Parameters adjusted during calibration; the rest stay at their initial value.
    /// The two offsets of the double exponential are held at zero.
    pub fn free_params(self) -> Vec<usize> {
        match self {
            FluctuationKind::HmUIII => vec![0, 2, 3, 5],
            k => (0..k.n_params()).collect(),
        }
    }

    /// Default starting point for calibration.
    pub fn default_params(self) -> Vec<f64> {
        match self {
            FluctuationKind::HeatI => vec![1e-3, 1.0],
            FluctuationKind::HeatII | FluctuationKind::HmUII => vec![-5.0, 1.0],
            FluctuationKind::HmV | FluctuationKind::HmUI => vec![1e-3, 1e-3, 1e-3, 0.5],
            FluctuationKind::HmUIII => vec![1e-3, 0.0, 0.5, 1e-3, 0.0, 0.2],
        }
    }

    /// Parameters giving `φ ≡ 0`.
    pub fn zero_params(self) -> Vec<f64> {
        match self {
            FluctuationKind::HeatI => vec![0.0, 1.0],
            // exp never vanishes; push the profile far below machine precision
            FluctuationKind::HeatII | FluctuationKind::HmUII => vec![-1e3, 1.0],
            FluctuationKind::HmV | FluctuationKind::HmUI => vec![0.0, 0.0, 0.0, 1.0],
            FluctuationKind::HmUIII => vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        }
    }
}

impl fmt::Display for FluctuationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FluctuationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FluctuationKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown fluctuation model `{s}`")))
    }
}

/// Spatial profile and its first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationModel {
    kind: FluctuationKind,
    params: Vec<f64>,
    tau: f64,
}

impl FluctuationModel {
    pub fn new(kind: FluctuationKind, params: Vec<f64>, tau: f64) -> Result<Self> {
        if params.len() != kind.n_params() {
            return Err(Error::invalid(format!(
                "{kind} takes {} parameters, got {}",
                kind.n_params(),
                params.len()
            )));
        }
        if let Some(p) = params.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("{kind} parameter {p} is not finite")));
        }
        if let Some(&i) = kind.divisors().iter().find(|&&i| params[i] == 0.0) {
            return Err(Error::invalid(format!(
                "{kind} parameter {} must be nonzero",
                kind.param_names()[i]
            )));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::invalid(format!("fluctuation period must be positive, got {tau}")));
        }
        Ok(Self { kind, params, tau })
    }

    /// A model of the given kind whose profile vanishes.
    pub fn zero(kind: FluctuationKind, tau: f64) -> Result<Self> {
        Self::new(kind, kind.zero_params(), tau)
    }

    pub fn kind(&self) -> FluctuationKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Self::new(self.kind, params, self.tau)
    }

    pub fn profile(&self, x: f64) -> Profile {
        let p = &self.params;
        match self.kind {
            FluctuationKind::HeatI => Profile {
                phi: p[0] * (1.0 - x / p[1]),
                dphi: -p[0] / p[1],
                d2phi: 0.0,
            },
            FluctuationKind::HeatII | FluctuationKind::HmUII => exponential(1.0, p[0], p[1], x),
            FluctuationKind::HmV | FluctuationKind::HmUI => {
                let (s, c) = (x / p[3]).sin_cos();
                let w = 1.0 / p[3];
                Profile {
                    phi: p[0] + p[1] * c + p[2] * s,
                    dphi: w * (p[2] * c - p[1] * s),
                    d2phi: -w * w * (p[1] * c + p[2] * s),
                }
            }
            FluctuationKind::HmUIII => {
                let a = exponential(p[0], p[1], p[2], x);
                let b = exponential(p[3], p[4], p[5], x);
                Profile {
                    phi: a.phi + b.phi,
                    dphi: a.dphi + b.dphi,
                    d2phi: a.d2phi + b.d2phi,
                }
            }
        }
    }

    /// `(φ, φ′)` at `x`.
    pub fn spatial_profile(&self, x: f64) -> (f64, f64) {
        let p = self.profile(x);
        (p.phi, p.dphi)
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        (TAU * t / self.tau).sin()
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.profile(x).phi * self.time_factor(t)
    }

    /// Period mean of `u′·∂u′/∂x`.
    pub fn avg_self_dx(&self, x: f64) -> f64 {
        let p = self.profile(x);
        0.5 * p.phi * p.dphi
    }

    /// Period mean of `u′·∂u′/∂t`; vanishes for a single sinusoidal factor.
    pub fn avg_self_dt(&self, _x: f64) -> f64 {
        0.0
    }

    /// `d/dx` of [`Self::avg_self_dx`].
    pub fn d_avg_self_dx(&self, x: f64) -> f64 {
        let p = self.profile(x);
        0.5 * (p.dphi * p.dphi + p.phi * p.d2phi)
    }

    fn check_period(a: &Self, b: &Self) -> Result<()> {
        if (a.tau - b.tau).abs() > 1e-12 * a.tau.max(b.tau) {
            return Err(Error::invalid(format!(
                "fluctuation periods differ: {} vs {}",
                a.tau, b.tau
            )));
        }
        Ok(())
    }
}

fn exponential(scale: f64, offset: f64, length: f64, x: f64) -> Profile {
    let phi = scale * (-(x - offset) / length).exp();
    Profile {
        phi,
        dphi: -phi / length,
        d2phi: phi / (length * length),
    }
}

/// Period mean of `a′·∂b′/∂x`.
pub fn avg_cross_dx(a: &FluctuationModel, b: &FluctuationModel, x: f64) -> Result<f64> {
    FluctuationModel::check_period(a, b)?;
    Ok(0.5 * a.profile(x).phi * b.profile(x).dphi)
}

/// Period mean of `a′·∂b′/∂t`; zero whenever both share the sinusoidal factor.
pub fn avg_cross_dt(a: &FluctuationModel, b: &FluctuationModel, _x: f64) -> Result<f64> {
    FluctuationModel::check_period(a, b)?;
    Ok(0.0)
}

/// `d/dx` of [`avg_cross_dx`].
pub fn d_avg_cross_dx(a: &FluctuationModel, b: &FluctuationModel, x: f64) -> Result<f64> {
    FluctuationModel::check_period(a, b)?;
    let (pa, pb) = (a.profile(x), b.profile(x));
    Ok(0.5 * (pa.dphi * pb.dphi + pa.phi * pb.d2phi))
}
