//! Shared domain types: grids, reference scales, property laws and the
//! physical <-> dimensionless maps.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform vertex-centred grid on `[0, 1]`, both boundaries included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceGrid {
    n_nodes: usize,
    dx: f64,
}

impl SpaceGrid {
    pub fn new(n_nodes: usize) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::invalid(format!("grid needs at least 3 nodes, got {n_nodes}")));
        }
        Ok(Self {
            n_nodes,
            dx: 1.0 / (n_nodes - 1) as f64,
        })
    }

    /// Grid from a requested spacing; `1/dx` must be (close to) an integer.
    pub fn from_spacing(dx: f64) -> Result<Self> {
        if !(dx > 0.0 && dx <= 0.5) {
            return Err(Error::invalid(format!("grid spacing must lie in (0, 0.5], got {dx}")));
        }
        let intervals = (1.0 / dx).round();
        if ((intervals * dx) - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("1/dx must be an integer, got dx = {dx}")));
        }
        Self::new(intervals as usize + 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_nodes).map(|j| self.x(j))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub horizon: f64,
    pub output_stride: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, horizon: f64, output_stride: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be positive, got {dt}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("empty time span"));
        }
        if output_stride == 0 {
            return Err(Error::invalid("output stride must be at least 1"));
        }
        Ok(Self {
            dt,
            horizon,
            output_stride,
        })
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Characteristic values used to make every quantity dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScales {
    /// t° [s]
    pub t_ref: f64,
    /// T° [K]
    pub temp_ref: f64,
    /// ℓ [m]
    pub length_ref: f64,
    /// c°_T [J/(m³ K)]
    pub c_ref: f64,
    /// k°_T [W/(m K)]
    pub k_ref: f64,
    /// θ° [-]
    pub moisture_ref: f64,
    /// D°_θ [m²/s]
    pub d_theta_ref: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityKind {
    /// Absolute temperature in K.
    Temperature,
    /// Time in s.
    Time,
    /// Position in m.
    Space,
    /// Heat flux in W/m².
    Flux,
    /// Volumetric moisture content θ.
    Moisture,
}

impl ReferenceScales {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("t_ref", self.t_ref),
            ("temp_ref", self.temp_ref),
            ("length_ref", self.length_ref),
            ("c_ref", self.c_ref),
            ("k_ref", self.k_ref),
            ("moisture_ref", self.moisture_ref),
            ("d_theta_ref", self.d_theta_ref),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("reference scale {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn factor(&self, kind: QuantityKind) -> f64 {
        match kind {
            QuantityKind::Temperature => self.temp_ref,
            QuantityKind::Time => self.t_ref,
            QuantityKind::Space => self.length_ref,
            QuantityKind::Flux => self.temp_ref * self.k_ref / self.length_ref,
            QuantityKind::Moisture => self.moisture_ref,
        }
    }

    pub fn nondimensionalize(&self, value: f64, kind: QuantityKind) -> f64 {
        value / self.factor(kind)
    }

    pub fn redimensionalize(&self, value: f64, kind: QuantityKind) -> f64 {
        value * self.factor(kind)
    }

    /// Seconds per dimensionless time unit, expressed in hours.
    pub fn hours_per_unit(&self) -> f64 {
        self.t_ref / 3600.0
    }
}

/// Fo_T = t°·k°/(ℓ²·c°).
pub fn fourier_number_heat(scales: &ReferenceScales) -> f64 {
    scales.t_ref * scales.k_ref / (scales.length_ref * scales.length_ref * scales.c_ref)
}

/// Bi = ℓ·h/k°.
pub fn biot_number(length_ref: f64, h: f64, k_ref: f64) -> f64 {
    length_ref * h / k_ref
}

/// Closed interval of field values over which property laws must stay positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleRange {
    pub min: f64,
    pub max: f64,
}

impl AdmissibleRange {
    pub const TEMPERATURE: Self = Self { min: 0.8, max: 1.2 };
    pub const MOISTURE: Self = Self { min: 0.0, max: 1.5 };

    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min <= max) {
            return Err(Error::invalid(format!("admissible range [{min}, {max}] is empty")));
        }
        Ok(Self { min, max })
    }
}

/// First-order property law `a0 + a1·(w − shift)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropertyPolynomial {
    pub a0: f64,
    pub a1: f64,
    #[serde(default)]
    pub shift: f64,
}

impl PropertyPolynomial {
    pub const fn new(a0: f64, a1: f64) -> Self {
        Self { a0, a1, shift: 0.0 }
    }

    pub const fn shifted(a0: f64, a1: f64, shift: f64) -> Self {
        Self { a0, a1, shift }
    }

    pub const fn constant(a0: f64) -> Self {
        Self::new(a0, 0.0)
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        self.a0 + self.a1 * (w - self.shift)
    }

    /// Evaluates and rejects non-positive results.
    pub fn eval_checked(&self, name: &'static str, w: f64) -> Result<f64> {
        let value = self.eval(w);
        if value > 0.0 {
            Ok(value)
        } else {
            Err(Error::NonPhysicalProperty { name, value, at: w })
        }
    }

    /// Positivity over the whole range; affine, so the endpoints suffice.
    pub fn check_positive(&self, name: &'static str, range: AdmissibleRange) -> Result<()> {
        self.eval_checked(name, range.min)?;
        self.eval_checked(name, range.max)?;
        Ok(())
    }

    pub fn max_over(&self, range: AdmissibleRange) -> f64 {
        self.eval(range.min).max(self.eval(range.max))
    }

    pub fn min_over(&self, range: AdmissibleRange) -> f64 {
        self.eval(range.min).min(self.eval(range.max))
    }
}

/// Thermo-physical constants of the heat-moisture case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// ρ₂, liquid water density [kg/m³]
    pub rho2: f64,
    /// c₂, liquid water specific heat [J/(kg K)]
    pub c2: f64,
    /// L°₁₂, latent heat of vaporisation [J/kg]
    pub latent_heat: f64,
    /// R₁; carried for completeness, no implemented equation uses it.
    pub r1: f64,
    /// ρ₀, dry density [kg/m³]
    pub rho0: f64,
    /// c₀, dry specific heat [J/(kg K)]
    pub c0_dry: f64,
}

impl PhysicalConstants {
    /// Rammed-earth wall values.
    pub const RAMMED_EARTH: Self = Self {
        rho2: 1e3,
        c2: 4185.5,
        latent_heat: 2.5e6,
        r1: 2e-3,
        rho0: 1730.0,
        c0_dry: 648.0,
    };

    pub fn validate(&self) -> Result<()> {
        let all = [self.rho2, self.c2, self.latent_heat, self.r1, self.rho0, self.c0_dry];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid("physical constants must all be positive"))
        }
    }
}

/// Nodal values of a dimensionless field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("field value at node {j} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn constant(grid: &SpaceGrid, value: f64) -> Self {
        Self(vec![value; grid.n_nodes()])
    }

    pub fn from_fn(grid: &SpaceGrid, f: impl Fn(f64) -> f64) -> Self {
        Self(grid.nodes().map(f).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn check_len(&self, grid: &SpaceGrid, what: &str) -> Result<()> {
        if self.0.len() != grid.n_nodes() {
            return Err(Error::invalid(format!(
                "{what} has {} values but the grid has {} nodes",
                self.0.len(),
                grid.n_nodes()
            )));
        }
        Ok(())
    }
}

impl AsRef<[f64]> for Field {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
