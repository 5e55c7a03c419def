//! Dimensionless nonlinear heat conduction with Robin boundaries: complete
//! model and average reduced model.
//!
//! Nodes are vertex-centred; interior nodes use the conservative three-point
//! stencil with arithmetic-mean face conductivity, boundary nodes use a
//! half-cell balance that closes with the Robin flux.

use crate::empirical::FluctuationModel;
use crate::integrate::{integrate, OdeSystem, Stepper, Trajectory};
use crate::signal::{block_average, AveragingSpec, BoundarySignal};
use crate::units::{AdmissibleRange, Field, PropertyPolynomial, SpaceGrid};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct HeatConfig {
    pub grid: SpaceGrid,
    pub fo: f64,
    pub bi_left: f64,
    pub bi_right: f64,
    pub alpha: f64,
    pub c_poly: PropertyPolynomial,
    pub k_poly: PropertyPolynomial,
    /// u∞ at x* = 0.
    pub bc_left: BoundarySignal,
    /// u∞ at x* = 1.
    pub bc_right: BoundarySignal,
    /// Absorbed short-wave g*∞ at x* = 0; absent means zero.
    pub bc_rad: Option<BoundarySignal>,
    pub initial: Field,
    pub range: AdmissibleRange,
}

impl HeatConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Fo", self.fo), ("Bi_L", self.bi_left), ("Bi_R", self.bi_right)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid(format!("absorptivity must be nonnegative, got {}", self.alpha)));
        }
        self.c_poly.check_positive("c*", self.range)?;
        self.k_poly.check_positive("k*", self.range)?;
        self.initial.check_len(&self.grid, "initial temperature")?;
        Ok(())
    }

    /// Earliest end time over all boundary signals.
    pub fn forcing_end(&self) -> f64 {
        let mut end = self.bc_left.end().min(self.bc_right.end());
        if let Some(g) = &self.bc_rad {
            end = end.min(g.end());
        }
        end
    }

    /// Gershgorin bound on the explicit Euler limit over the admissible range.
    pub fn stable_dt(&self) -> f64 {
        let dx = self.grid.dx();
        let kmax = self.k_poly.max_over(self.range);
        let cmin = self.c_poly.min_over(self.range);
        let interior = 4.0 * self.fo * kmax / (cmin * dx * dx);
        let bi = self.bi_left.max(self.bi_right);
        let boundary = (self.fo / cmin) * (2.0 / (dx * dx)) * (2.0 * kmax + dx * bi);
        2.0 / interior.max(boundary)
    }

    /// Block-averages every boundary signal with period τ.
    pub fn averaged(&self, tau: f64) -> Result<HeatConfig> {
        let spec = AveragingSpec::new(tau)?;
        Ok(HeatConfig {
            bc_left: block_average(&self.bc_left, spec)?,
            bc_right: block_average(&self.bc_right, spec)?,
            bc_rad: self.bc_rad.as_ref().map(|g| block_average(g, spec)).transpose()?,
            ..self.clone()
        })
    }

    pub fn run(&self, stepper: Stepper, horizon: f64, output_stride: usize) -> Result<Trajectory> {
        self.validate()?;
        integrate(self, self.initial.values(), 0.0, horizon, stepper, output_stride)
    }
}

/// Time-independent ARM closure terms, evaluated once per model.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCorrection {
    /// Volumetric source 𝕊 at each node (before division by c*).
    pub source: Vec<f64>,
    /// 𝕊ₖ at x* = 0.
    pub sk_left: f64,
    /// 𝕊ₖ at x* = 1.
    pub sk_right: f64,
}

impl HeatCorrection {
    pub fn new(cfg: &HeatConfig, fluct: &FluctuationModel) -> Self {
        let k1 = cfg.k_poly.a1;
        let c1 = cfg.c_poly.a1;
        let source = cfg
            .grid
            .nodes()
            .map(|x| -c1 * fluct.avg_self_dt(x) + cfg.fo * k1 * fluct.d_avg_self_dx(x))
            .collect();
        Self {
            source,
            sk_left: k1 * fluct.avg_self_dx(0.0),
            sk_right: k1 * fluct.avg_self_dx(1.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeatArmConfig {
    /// Configuration with block-averaged boundary signals.
    pub base: HeatConfig,
    pub fluct: FluctuationModel,
    pub correction: HeatCorrection,
}

impl HeatArmConfig {
    /// Averages the boundary signals of `complete` with the period of `fluct`.
    pub fn from_complete(complete: &HeatConfig, fluct: FluctuationModel) -> Result<Self> {
        let base = complete.averaged(fluct.tau())?;
        Ok(Self::from_averaged(base, fluct))
    }

    /// `averaged` must already carry block-averaged signals for `fluct.tau()`.
    pub fn from_averaged(averaged: HeatConfig, fluct: FluctuationModel) -> Self {
        let correction = HeatCorrection::new(&averaged, &fluct);
        Self {
            base: averaged,
            fluct,
            correction,
        }
    }

    pub fn tau(&self) -> f64 {
        self.fluct.tau()
    }

    pub fn run(&self, stepper: Stepper, horizon: f64, output_stride: usize) -> Result<Trajectory> {
        self.base.validate()?;
        integrate(self, self.base.initial.values(), 0.0, horizon, stepper, output_stride)
    }
}

fn property(p: &PropertyPolynomial, name: &'static str, w: f64) -> Result<f64> {
    let v = p.eval(w);
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::NonPhysicalProperty { name, value: v, at: w })
    }
}

fn tendency(
    cfg: &HeatConfig,
    correction: Option<&HeatCorrection>,
    u: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    let n = u.len();
    let dx = cfg.grid.dx();
    let u_left = cfg.bc_left.sample(t)?;
    let u_right = cfg.bc_right.sample(t)?;
    let g = match &cfg.bc_rad {
        Some(sig) => sig.sample(t)?,
        None => 0.0,
    };
    let (sk_left, sk_right) = correction.map_or((0.0, 0.0), |c| (c.sk_left, c.sk_right));

    let mut k_here = property(&cfg.k_poly, "k*", u[0])?;
    let mut c_here = property(&cfg.c_poly, "c*", u[0])?;
    let mut flux_left = cfg.bi_left * (u[0] - u_left) - cfg.alpha * g - sk_left;
    let mut scale = 2.0;
    for j in 0..n {
        let flux_right = if j + 1 < n {
            let k_next = property(&cfg.k_poly, "k*", u[j + 1])?;
            let f = 0.5 * (k_here + k_next) * (u[j + 1] - u[j]) / dx;
            k_here = k_next;
            f
        } else {
            scale = 2.0;
            -cfg.bi_right * (u[j] - u_right) - sk_right
        };
        let mut du = (cfg.fo / c_here) * scale * (flux_right - flux_left) / dx;
        if let Some(c) = correction {
            du += c.source[j] / c_here;
        }
        out[j] = du;
        flux_left = flux_right;
        scale = 1.0;
        if j + 1 < n {
            c_here = property(&cfg.c_poly, "c*", u[j + 1])?;
        }
    }
    Ok(())
}

/// Complete-model tendency du/dt*.
pub fn cm_rhs(cfg: &HeatConfig, u: &Field, t: f64) -> Result<Field> {
    u.check_len(&cfg.grid, "temperature")?;
    let mut out = vec![0.0; u.len()];
    tendency(cfg, None, u.values(), t, &mut out)?;
    Field::new(out)
}

/// Reduced-model tendency dū/dt*.
pub fn arm_rhs(cfg: &HeatArmConfig, u_bar: &Field, t: f64) -> Result<Field> {
    u_bar.check_len(&cfg.base.grid, "temperature")?;
    let mut out = vec![0.0; u_bar.len()];
    tendency(&cfg.base, Some(&cfg.correction), u_bar.values(), t, &mut out)?;
    Field::new(out)
}

impl OdeSystem for HeatConfig {
    fn dim(&self) -> usize {
        self.grid.n_nodes()
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        tendency(self, None, y, t, dydt)
    }

    fn stable_dt(&self) -> f64 {
        HeatConfig::stable_dt(self)
    }
}

impl OdeSystem for HeatArmConfig {
    fn dim(&self) -> usize {
        self.base.grid.n_nodes()
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        tendency(&self.base, Some(&self.correction), y, t, dydt)
    }

    fn stable_dt(&self) -> f64 {
        self.base.stable_dt()
    }
}

/// ũ = ū + u′(x, t).
pub fn reconstruct(grid: &SpaceGrid, u_bar: &[f64], model: &FluctuationModel, t: f64) -> Vec<f64> {
    let s = model.time_factor(t);
    u_bar
        .iter()
        .zip(grid.nodes())
        .map(|(u, x)| u + model.profile(x).phi * s)
        .collect()
}

/// Reconstructs every snapshot of an ARM trajectory.
pub fn reconstruct_trajectory(grid: &SpaceGrid, traj: &Trajectory, model: &FluctuationModel) -> Trajectory {
    Trajectory {
        times: traj.times.clone(),
        states: traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, s)| reconstruct(grid, s, model, t))
            .collect(),
        wall_time: traj.wall_time,
        n_stages: traj.n_stages,
    }
}

/// Second-order one-sided gradient at the last node.
pub fn gradient_right(u: &[f64], dx: f64) -> f64 {
    let n = u.len();
    (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx)
}

/// Second-order one-sided gradient at the first node.
pub fn gradient_left(u: &[f64], dx: f64) -> f64 {
    (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
}

/// Dimensionless conductive flux `−k*·∂u/∂x` at x* = 1.
pub fn heat_flux(cfg: &HeatConfig, u: &[f64]) -> f64 {
    let n = u.len();
    -cfg.k_poly.eval(u[n - 1]) * gradient_right(u, cfg.grid.dx())
}
