//! Coupled heat and moisture transfer with Dirichlet boundaries: complete
//! model, average reduced model, and a scalar diffusion solver.
//!
//! The flat state vector is `[u_0 … u_N, v_0 … v_N]`. Boundary nodes are
//! driven by their signals: the stencil reads the sampled boundary values,
//! boundary tendencies are the signal slopes, and every accepted step
//! re-pins the boundary nodes.

use crate::empirical::{avg_cross_dt, d_avg_cross_dx, FluctuationModel};
use crate::heat::gradient_right;
use crate::integrate::{integrate, OdeSystem, Stepper, Trajectory};
use crate::signal::{block_average, AveragingSpec, BoundarySignal};
use crate::units::{AdmissibleRange, Field, PropertyPolynomial, ReferenceScales, SpaceGrid};
use crate::{Error, Result};

/// Dimensionless groups of the coupled model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmGroups {
    pub fo_m: f64,
    pub fo_t: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl HmGroups {
    /// Defaults by dimensional analysis: `Fo_M = t°·D°_θ/ℓ²`,
    /// `Fo_T = t°·k°/(ℓ²·c°)`, `γ = D_T·T°/(D°_θ·θ°)`, `δ = L₁₂·k_TM·θ°/(k°·T°)`.
    pub fn derive(scales: &ReferenceScales, d_t: f64, k_tm: f64, latent_heat: f64) -> Self {
        let l2 = scales.length_ref * scales.length_ref;
        Self {
            fo_m: scales.t_ref * scales.d_theta_ref / l2,
            fo_t: scales.t_ref * scales.k_ref / (l2 * scales.c_ref),
            gamma: d_t * scales.temp_ref / (scales.d_theta_ref * scales.moisture_ref),
            delta: latent_heat * k_tm * scales.moisture_ref / (scales.k_ref * scales.temp_ref),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HmConfig {
    pub grid: SpaceGrid,
    pub fo_m: f64,
    pub fo_t: f64,
    pub gamma: f64,
    pub delta: f64,
    /// D*_θ(v)
    pub d_poly: PropertyPolynomial,
    /// c*_T(v)
    pub c_poly: PropertyPolynomial,
    /// k*_T(v)
    pub k_poly: PropertyPolynomial,
    /// D*_T
    pub d_t: f64,
    /// k*_TM
    pub k_tm: f64,
    pub u_left: BoundarySignal,
    pub u_right: BoundarySignal,
    pub v_left: BoundarySignal,
    pub v_right: BoundarySignal,
    pub initial_u: Field,
    pub initial_v: Field,
    pub range_u: AdmissibleRange,
    pub range_v: AdmissibleRange,
}

/// Temperature and moisture fields.
#[derive(Debug, Clone, PartialEq)]
pub struct HmState {
    pub u: Field,
    pub v: Field,
}

impl HmState {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::invalid(format!(
                "temperature has {} nodes, moisture has {}",
                u.len(),
                v.len()
            )));
        }
        Ok(Self { u, v })
    }

    pub fn from_flat(y: &[f64]) -> Result<Self> {
        let n = y.len() / 2;
        Self::new(Field::new(y[..n].to_vec())?, Field::new(y[n..].to_vec())?)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut y = self.u.values().to_vec();
        y.extend_from_slice(self.v.values());
        y
    }
}

/// Splits a flat state into `(u, v)`.
pub fn split(y: &[f64]) -> (&[f64], &[f64]) {
    y.split_at(y.len() / 2)
}

impl HmConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("Fo_M", self.fo_m), ("Fo_T", self.fo_t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("γ", self.gamma), ("δ", self.delta), ("D*_T", self.d_t), ("k*_TM", self.k_tm)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        self.d_poly.check_positive("D*_θ", self.range_v)?;
        self.c_poly.check_positive("c*_T", self.range_v)?;
        self.k_poly.check_positive("k*_T", self.range_v)?;
        self.initial_u.check_len(&self.grid, "initial temperature")?;
        self.initial_v.check_len(&self.grid, "initial moisture")?;
        Ok(())
    }

    pub fn forcing_end(&self) -> f64 {
        [&self.u_left, &self.u_right, &self.v_left, &self.v_right]
            .iter()
            .map(|s| s.end())
            .fold(f64::INFINITY, f64::min)
    }

    /// Explicit limit: the smaller of the two equations' Gershgorin limits,
    /// coupling terms included.
    pub fn stable_dt(&self) -> f64 {
        let dx2 = self.grid.dx() * self.grid.dx();
        let dmax = self.d_poly.max_over(self.range_v);
        let kmax = self.k_poly.max_over(self.range_v);
        let cmin = self.c_poly.min_over(self.range_v);
        let lambda_v = 4.0 * self.fo_m * (dmax + (self.gamma * self.d_t).abs()) / dx2;
        let lambda_u = 4.0 * self.fo_t * (kmax + (self.delta * self.k_tm).abs()) / (cmin * dx2);
        2.0 / lambda_v.max(lambda_u)
    }

    pub fn initial_state(&self) -> HmState {
        HmState {
            u: self.initial_u.clone(),
            v: self.initial_v.clone(),
        }
    }

    pub fn averaged(&self, tau: f64) -> Result<HmConfig> {
        let spec = AveragingSpec::new(tau)?;
        Ok(HmConfig {
            u_left: block_average(&self.u_left, spec)?,
            u_right: block_average(&self.u_right, spec)?,
            v_left: block_average(&self.v_left, spec)?,
            v_right: block_average(&self.v_right, spec)?,
            ..self.clone()
        })
    }

    pub fn run(&self, stepper: Stepper, horizon: f64, output_stride: usize) -> Result<Trajectory> {
        self.validate()?;
        integrate(self, &self.initial_state().to_flat(), 0.0, horizon, stepper, output_stride)
    }
}

/// Time-independent ARM sources for both equations.
#[derive(Debug, Clone, PartialEq)]
pub struct HmCorrection {
    /// 𝕊ᵥ per node.
    pub source_v: Vec<f64>,
    /// 𝕊ᵤ per node, before division by c*_T.
    pub source_u: Vec<f64>,
}

impl HmCorrection {
    pub fn new(cfg: &HmConfig, u_fluct: &FluctuationModel, v_fluct: &FluctuationModel) -> Result<Self> {
        let d0 = cfg.d_poly.a1;
        let k0 = cfg.k_poly.a1;
        let c0 = cfg.c_poly.a1;
        let mut source_v = Vec::with_capacity(cfg.grid.n_nodes());
        let mut source_u = Vec::with_capacity(cfg.grid.n_nodes());
        for x in cfg.grid.nodes() {
            source_v.push(cfg.fo_m * d0 * v_fluct.d_avg_self_dx(x));
            source_u.push(
                cfg.fo_t * k0 * d_avg_cross_dx(v_fluct, u_fluct, x)? - c0 * avg_cross_dt(v_fluct, u_fluct, x)?,
            );
        }
        Ok(Self { source_v, source_u })
    }
}

/// Contribution of 𝕊ᵤ to du/dt*: added after dividing by c*_T.
#[inline]
fn heat_source_term(source_u: f64, c: f64) -> f64 {
    source_u / c
}

#[derive(Debug, Clone)]
pub struct HmArmConfig {
    pub base: HmConfig,
    pub u_fluct: FluctuationModel,
    pub v_fluct: FluctuationModel,
    pub correction: HmCorrection,
}

impl HmArmConfig {
    pub fn from_complete(complete: &HmConfig, u_fluct: FluctuationModel, v_fluct: FluctuationModel) -> Result<Self> {
        let base = complete.averaged(u_fluct.tau())?;
        Self::from_averaged(base, u_fluct, v_fluct)
    }

    pub fn from_averaged(averaged: HmConfig, u_fluct: FluctuationModel, v_fluct: FluctuationModel) -> Result<Self> {
        let correction = HmCorrection::new(&averaged, &u_fluct, &v_fluct)?;
        Ok(Self {
            base: averaged,
            u_fluct,
            v_fluct,
            correction,
        })
    }

    pub fn tau(&self) -> f64 {
        self.u_fluct.tau()
    }

    pub fn run(&self, stepper: Stepper, horizon: f64, output_stride: usize) -> Result<Trajectory> {
        self.base.validate()?;
        integrate(self, &self.base.initial_state().to_flat(), 0.0, horizon, stepper, output_stride)
    }

    /// `(ũ, ṽ)` as a flat state.
    pub fn reconstruct(&self, y_bar: &[f64], t: f64) -> Vec<f64> {
        let (u, v) = split(y_bar);
        let su = self.u_fluct.time_factor(t);
        let sv = self.v_fluct.time_factor(t);
        let nodes: Vec<f64> = self.base.grid.nodes().collect();
        let mut out = Vec::with_capacity(y_bar.len());
        out.extend(u.iter().zip(&nodes).map(|(a, &x)| a + self.u_fluct.profile(x).phi * su));
        out.extend(v.iter().zip(&nodes).map(|(a, &x)| a + self.v_fluct.profile(x).phi * sv));
        out
    }

    pub fn reconstruct_trajectory(&self, traj: &Trajectory) -> Trajectory {
        Trajectory {
            times: traj.times.clone(),
            states: traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(&t, s)| self.reconstruct(s, t))
                .collect(),
            wall_time: traj.wall_time,
            n_stages: traj.n_stages,
        }
    }
}

fn property(p: &PropertyPolynomial, name: &'static str, w: f64) -> Result<f64> {
    let value = p.eval(w);
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonPhysicalProperty { name, value, at: w })
    }
}

fn pinned(y: &[f64], j: usize, left: f64, right: f64) -> f64 {
    if j == 0 {
        left
    } else if j + 1 == y.len() {
        right
    } else {
        y[j]
    }
}

fn tendency(cfg: &HmConfig, correction: Option<&HmCorrection>, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
    let n = cfg.grid.n_nodes();
    let dx = cfg.grid.dx();
    let (u, v) = split(y);
    let (du, dv) = out.split_at_mut(n);
    let (ul, ur) = (cfg.u_left.sample(t)?, cfg.u_right.sample(t)?);
    let (vl, vr) = (cfg.v_left.sample(t)?, cfg.v_right.sample(t)?);
    du[0] = cfg.u_left.slope(t)?;
    du[n - 1] = cfg.u_right.slope(t)?;
    dv[0] = cfg.v_left.slope(t)?;
    dv[n - 1] = cfg.v_right.slope(t)?;

    let uu = |j| pinned(u, j, ul, ur);
    let vv = |j| pinned(v, j, vl, vr);

    let face = |j: usize, d_j: f64, d_n: f64, k_j: f64, k_n: f64| {
        let (du_f, dv_f) = (uu(j + 1) - uu(j), vv(j + 1) - vv(j));
        let fv = 0.5 * (d_j + d_n) * dv_f / dx + cfg.gamma * cfg.d_t * du_f / dx;
        let fu = 0.5 * (k_j + k_n) * du_f / dx + cfg.delta * cfg.k_tm * dv_f / dx;
        (fu, fv)
    };

    let mut d_j = property(&cfg.d_poly, "D*_θ", vv(0))?;
    let mut k_j = property(&cfg.k_poly, "k*_T", vv(0))?;
    let mut d_n = property(&cfg.d_poly, "D*_θ", vv(1))?;
    let mut k_n = property(&cfg.k_poly, "k*_T", vv(1))?;
    let (mut fu_left, mut fv_left) = face(0, d_j, d_n, k_j, k_n);
    for j in 1..n - 1 {
        d_j = d_n;
        k_j = k_n;
        d_n = property(&cfg.d_poly, "D*_θ", vv(j + 1))?;
        k_n = property(&cfg.k_poly, "k*_T", vv(j + 1))?;
        let (fu_right, fv_right) = face(j, d_j, d_n, k_j, k_n);
        let c = property(&cfg.c_poly, "c*_T", vv(j))?;
        dv[j] = cfg.fo_m * (fv_right - fv_left) / dx;
        du[j] = (cfg.fo_t / c) * (fu_right - fu_left) / dx;
        if let Some(corr) = correction {
            dv[j] += corr.source_v[j];
            du[j] += heat_source_term(corr.source_u[j], c);
        }
        fu_left = fu_right;
        fv_left = fv_right;
    }
    Ok(())
}

fn project_boundaries(cfg: &HmConfig, t: f64, y: &mut [f64]) -> Result<()> {
    let n = cfg.grid.n_nodes();
    y[0] = cfg.u_left.sample(t)?;
    y[n - 1] = cfg.u_right.sample(t)?;
    y[n] = cfg.v_left.sample(t)?;
    y[2 * n - 1] = cfg.v_right.sample(t)?;
    Ok(())
}

pub fn cm_rhs_hm(cfg: &HmConfig, s: &HmState, t: f64) -> Result<HmState> {
    s.u.check_len(&cfg.grid, "temperature")?;
    s.v.check_len(&cfg.grid, "moisture")?;
    let y = s.to_flat();
    let mut out = vec![0.0; y.len()];
    tendency(cfg, None, t, &y, &mut out)?;
    HmState::from_flat(&out)
}

pub fn arm_rhs_hm(cfg: &HmArmConfig, s: &HmState, t: f64) -> Result<HmState> {
    s.u.check_len(&cfg.base.grid, "temperature")?;
    s.v.check_len(&cfg.base.grid, "moisture")?;
    let y = s.to_flat();
    let mut out = vec![0.0; y.len()];
    tendency(&cfg.base, Some(&cfg.correction), t, &y, &mut out)?;
    HmState::from_flat(&out)
}

impl OdeSystem for HmConfig {
    fn dim(&self) -> usize {
        2 * self.grid.n_nodes()
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        tendency(self, None, t, y, dydt)
    }

    fn project(&self, t: f64, y: &mut [f64]) -> Result<()> {
        project_boundaries(self, t, y)
    }

    fn stable_dt(&self) -> f64 {
        HmConfig::stable_dt(self)
    }
}

impl OdeSystem for HmArmConfig {
    fn dim(&self) -> usize {
        2 * self.base.grid.n_nodes()
    }

    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()> {
        tendency(&self.base, Some(&self.correction), t, y, dydt)
    }

    fn project(&self, t: f64, y: &mut [f64]) -> Result<()> {
        project_boundaries(&self.base, t, y)
    }

    fn stable_dt(&self) -> f64 {
        self.base.stable_dt()
    }
}

/// Physical constants needed to express the coupled fluxes in W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxConstants {
    pub scales: ReferenceScales,
    /// L₁₂ [J/kg]
    pub latent_heat: f64,
    /// k_TM (physical)
    pub k_tm: f64,
}

/// Output fluxes at x = ℓ in W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmFlux {
    pub j_q: f64,
    pub j_m: f64,
    pub j_qm: f64,
}

/// `j_q = −k_T·∂T/∂x`, `j_m = −L₁₂·k_TM·∂θ/∂x`, `j_qm = j_q + j_m`, at x = ℓ.
pub fn total_flux(cfg: &HmConfig, u: &[f64], v: &[f64], k: &FluxConstants) -> HmFlux {
    let dx = cfg.grid.dx();
    let s = &k.scales;
    let n = v.len();
    let k_t = s.k_ref * cfg.k_poly.eval(v[n - 1]);
    let grad_t = gradient_right(u, dx) * s.temp_ref / s.length_ref;
    let grad_theta = gradient_right(v, dx) * s.moisture_ref / s.length_ref;
    let j_q = -k_t * grad_t;
    let j_m = -k.latent_heat * k.k_tm * grad_theta;
    HmFlux { j_q, j_m, j_qm: j_q + j_m }
}

/// Scalar `c*(w)·∂w/∂t = fo·∂x(k*(w)·∂w/∂x)` with Dirichlet ends.
#[derive(Debug, Clone)]
pub struct DirichletDiffusion {
    pub grid: SpaceGrid,
    pub fo: f64,
    pub c_poly: PropertyPolynomial,
    pub k_poly: PropertyPolynomial,
    pub left: BoundarySignal,
    pub right: BoundarySignal,
    pub initial: Field,
    pub range: AdmissibleRange,
}

impl DirichletDiffusion {
    /// Constant unit coefficients.
    pub fn linear(grid: SpaceGrid, fo: f64, left: BoundarySignal, right: BoundarySignal, initial: Field) -> Self {
        Self {
            grid,
            fo,
            c_poly: PropertyPolynomial::constant(1.0),
            k_poly: PropertyPolynomial::constant(1.0),
            left,
            right,
            initial,
            range: AdmissibleRange::MOISTURE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fo > 0.0 && self.fo.is_finite()) {
            return Err(Error::invalid(format!("Fo must be positive, got {}", self.fo)));
        }
        self.c_poly.check_positive("c*", self.range)?;
        self.k_poly.check_positive("k*", self.range)?;
        self.initial.check_len(&self.grid, "initial field")
    }

    pub fn run(&self, stepper: Stepper, horizon: f64, output_stride: usize) -> Result<Trajectory> {
        self.validate()?;
        integrate(self, self.initial.values(), 0.0, horizon, stepper, output_stride)
    }
}

impl OdeSystem for DirichletDiffusion {
    fn dim(&self) -> usize {
        self.grid.n_nodes()
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<()> {
        let n = y.len();
        let dx = self.grid.dx();
        let (wl, wr) = (self.left.sample(t)?, self.right.sample(t)?);
        let w = |j| pinned(y, j, wl, wr);
        out[0] = self.left.slope(t)?;
        out[n - 1] = self.right.slope(t)?;
        let mut k_j;
        let mut k_n = property(&self.k_poly, "k*", w(0))?;
        let mut f_left = 0.0;
        for j in 0..n - 1 {
            k_j = k_n;
            k_n = property(&self.k_poly, "k*", w(j + 1))?;
            let f_right = 0.5 * (k_j + k_n) * (w(j + 1) - w(j)) / dx;
            if j > 0 {
                let c = property(&self.c_poly, "c*", w(j))?;
                out[j] = (self.fo / c) * (f_right - f_left) / dx;
            }
            f_left = f_right;
        }
        Ok(())
    }

    fn project(&self, t: f64, y: &mut [f64]) -> Result<()> {
        let n = y.len();
        y[0] = self.left.sample(t)?;
        y[n - 1] = self.right.sample(t)?;
        Ok(())
    }

    fn stable_dt(&self) -> f64 {
        let dx = self.grid.dx();
        let kmax = self.k_poly.max_over(self.range);
        let cmin = self.c_poly.min_over(self.range);
        2.0 / (4.0 * self.fo * kmax / (cmin * dx * dx))
    }
}
