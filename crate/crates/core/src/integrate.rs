//! Explicit Euler and first-order Runge–Kutta–Legendre (RKL1) super-time-stepping.

use std::time::Instant;

use crate::{Error, Result};

/// Largest stage count a single super-step may use.
pub const MAX_STAGES: usize = 1000;

/// A semi-discrete system `dy/dt = F(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Writes `F(t, y)` into `dydt`.
    fn rhs(&self, t: f64, y: &[f64], dydt: &mut [f64]) -> Result<()>;

    /// Enforces algebraic constraints (strong boundary values) after a step.
    fn project(&self, _t: f64, _y: &mut [f64]) -> Result<()> {
        Ok(())
    }

    /// Explicit Euler stability limit `2/λ_max` used for stage selection.
    fn stable_dt(&self) -> f64;
}

/// `2/λ_max` with `λ_max = 4·fo/Δx²`.
pub fn max_stable_dt(fo: f64, dx: f64) -> f64 {
    dx * dx / (2.0 * fo)
}

/// Largest admissible RKL1 macro step for `n_stages` stages.
pub fn super_time_step(n_stages: usize, dt_exp: f64) -> f64 {
    let s = n_stages as f64;
    0.5 * (s * s + s) * dt_exp
}

/// Smallest stage count whose super-time-step covers `dt`.
pub fn stages_for(dt: f64, dt_exp: f64) -> Result<usize> {
    if !(dt > 0.0) || !(dt_exp > 0.0) {
        return Err(Error::invalid("time steps must be positive"));
    }
    // (s² + s)/2 ≥ r  ⇔  s ≥ (−1 + sqrt(1 + 8r))/2
    let r = dt / dt_exp;
    let mut s = ((-1.0 + (1.0 + 8.0 * r).sqrt()) / 2.0).ceil().max(1.0) as usize;
    while s > 1 && super_time_step(s - 1, dt_exp) >= dt {
        s -= 1;
    }
    while super_time_step(s, dt_exp) < dt {
        s += 1;
    }
    if s > MAX_STAGES {
        return Err(Error::invalid(format!(
            "time step {dt} needs {s} RKL1 stages; the limit of {MAX_STAGES} stages allows at most {}",
            super_time_step(MAX_STAGES, dt_exp)
        )));
    }
    Ok(s)
}

fn check_finite(y: &[f64], time: f64, stage: usize) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged { time, stage })
    }
}

/// `y + dt·F(t, y)`.
pub fn euler_step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], dt: f64) -> Result<Vec<f64>> {
    let mut f = vec![0.0; y.len()];
    sys.rhs(t, y, &mut f)?;
    let out: Vec<f64> = y.iter().zip(&f).map(|(a, b)| a + dt * b).collect();
    check_finite(&out, t, 1)?;
    Ok(out)
}

/// One RKL1 super-step of size `dt` with `n_stages` stages. Stage `j` sits at
/// `t + c_j·dt`, `c_j = (j² + j)/(s² + s)`: its right-hand side is evaluated
/// at the time of stage `j − 1`, and intermediate stages are projected at
/// their own time. The final stage is left for the caller to project.
pub fn rkl1_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    dt: f64,
    n_stages: usize,
) -> Result<Vec<f64>> {
    let mut ws = Workspace::new(y.len());
    let mut out = y.to_vec();
    ws.rkl1(sys, t, &mut out, dt, n_stages)?;
    Ok(out)
}

struct Workspace {
    prev: Vec<f64>,
    prev2: Vec<f64>,
    f: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            prev: vec![0.0; n],
            prev2: vec![0.0; n],
            f: vec![0.0; n],
        }
    }

    fn euler<S: OdeSystem + ?Sized>(&mut self, sys: &S, t: f64, y: &mut [f64], dt: f64) -> Result<()> {
        sys.rhs(t, y, &mut self.f)?;
        for (a, b) in y.iter_mut().zip(&self.f) {
            *a += dt * b;
        }
        check_finite(y, t, 1)
    }

    /// Overwrites `y` with `Y_s`.
    fn rkl1<S: OdeSystem + ?Sized>(
        &mut self,
        sys: &S,
        t: f64,
        y: &mut [f64],
        dt: f64,
        s: usize,
    ) -> Result<()> {
        if s == 0 {
            return Err(Error::invalid("RKL1 needs at least one stage"));
        }
        let sf = s as f64;
        let w1 = 2.0 / (sf * sf + sf);

        // prev2 = Y_{j-2}, prev = Y_{j-1}; y receives Y_j.
        self.prev2.copy_from_slice(y);
        sys.rhs(t, &self.prev2, &mut self.f)?;
        for (i, v) in self.prev.iter_mut().enumerate() {
            *v = self.prev2[i] + w1 * dt * self.f[i];
        }
        check_finite(&self.prev, t, 1)?;
        if s == 1 {
            y.copy_from_slice(&self.prev);
            return Ok(());
        }
        let stage_time = |j: usize| t + 0.5 * w1 * ((j * j + j) as f64) * dt;
        sys.project(stage_time(1), &mut self.prev)?;
        for j in 2..=s {
            let jf = j as f64;
            let mu = (2.0 * jf - 1.0) / jf;
            let nu = (1.0 - jf) / jf;
            let mu_t = mu * w1;
            sys.rhs(stage_time(j - 1), &self.prev, &mut self.f)?;
            for i in 0..y.len() {
                y[i] = mu * self.prev[i] + nu * self.prev2[i] + mu_t * dt * self.f[i];
            }
            check_finite(y, t, j)?;
            if j < s {
                sys.project(stage_time(j), y)?;
                std::mem::swap(&mut self.prev2, &mut self.prev);
                self.prev.copy_from_slice(y);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    Euler { dt: f64 },
    /// `n_stages = None` picks the smallest stable stage count for `dt`.
    Rkl1 { dt: f64, n_stages: Option<usize> },
}

impl Stepper {
    pub fn dt(&self) -> f64 {
        match *self {
            Stepper::Euler { dt } | Stepper::Rkl1 { dt, .. } => dt,
        }
    }

    /// Stage count this stepper will use on `sys` (1 for Euler).
    pub fn stages<S: OdeSystem + ?Sized>(&self, sys: &S) -> Result<usize> {
        match *self {
            Stepper::Euler { .. } => Ok(1),
            Stepper::Rkl1 { n_stages: Some(s), .. } => {
                if s == 0 || s > MAX_STAGES {
                    Err(Error::invalid(format!("stage count must lie in 1..={MAX_STAGES}")))
                } else {
                    Ok(s)
                }
            }
            Stepper::Rkl1 { dt, n_stages: None } => stages_for(dt, sys.stable_dt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Seconds spent marching.
    pub wall_time: f64,
    pub n_stages: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Marches `initial` from `t0` to `t_end`. The last step is shortened to land
/// on `t_end`. Snapshots are taken at `t0`, every `output_stride` steps, and
/// at `t_end`.
pub fn integrate<S: OdeSystem + ?Sized>(
    sys: &S,
    initial: &[f64],
    t0: f64,
    t_end: f64,
    stepper: Stepper,
    output_stride: usize,
) -> Result<Trajectory> {
    integrate_with(sys, initial, t0, t_end, stepper, output_stride, |_, _| Ok(()))
}

/// [`integrate`] with a callback invoked after every accepted step.
pub fn integrate_with<S: OdeSystem + ?Sized>(
    sys: &S,
    initial: &[f64],
    t0: f64,
    t_end: f64,
    stepper: Stepper,
    output_stride: usize,
    mut on_step: impl FnMut(f64, &[f64]) -> Result<()>,
) -> Result<Trajectory> {
    if initial.len() != sys.dim() {
        return Err(Error::invalid(format!(
            "initial state has {} entries, system expects {}",
            initial.len(),
            sys.dim()
        )));
    }
    if !(t_end >= t0) {
        return Err(Error::invalid("empty time span"));
    }
    let dt = stepper.dt();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid("time step must be positive"));
    }
    let stride = output_stride.max(1);
    let n_stages = stepper.stages(sys)?;
    let n_steps = ((t_end - t0) / dt - 1e-9).ceil().max(0.0) as usize;

    let start = Instant::now();
    let mut y = initial.to_vec();
    sys.project(t0, &mut y)?;
    check_finite(&y, t0, 0)?;
    let mut ws = Workspace::new(y.len());
    let mut times = vec![t0];
    let mut states = vec![y.clone()];

    for k in 0..n_steps {
        let t = t0 + k as f64 * dt;
        let t_next = if k + 1 == n_steps { t_end } else { t0 + (k + 1) as f64 * dt };
        let h = t_next - t;
        match stepper {
            Stepper::Euler { .. } => ws.euler(sys, t, &mut y, h)?,
            Stepper::Rkl1 { .. } => ws.rkl1(sys, t, &mut y, h, n_stages)?,
        }
        sys.project(t_next, &mut y)?;
        on_step(t_next, &y)?;
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            times.push(t_next);
            states.push(y.clone());
        }
    }
    Ok(Trajectory {
        times,
        states,
        wall_time: start.elapsed().as_secs_f64(),
        n_stages,
    })
}
