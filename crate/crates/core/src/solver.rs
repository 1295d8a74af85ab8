//! Method-of-lines integrator for the diffusive system on `[0, length]` with
//! zero-flux boundaries: second-order central Laplacian with mirror ghost
//! nodes, classical RK4 in time.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    disease_free_equilibrium, endemic_equilibrium, kinetics, kinetics_jacobian, ModelParams, State,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub length: f64,
    pub n: usize,
    pub dx: f64,
}

impl Grid1D {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 nodes, got {n}")));
        }
        Ok(Self { length, n, dx: length / (n - 1) as f64 })
    }

    pub fn y(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.length
        } else {
            i as f64 * self.dx
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.y(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub grid: Grid1D,
    /// Per-node state (x1, x2, x3, x4).
    pub nodes: Vec<State>,
}

impl SimState {
    pub fn uniform(grid: Grid1D, x: State) -> Self {
        Self { t: 0.0, grid, nodes: vec![x; grid.n] }
    }

    /// Values of compartment `k` (0-based) at every node.
    pub fn field(&self, k: usize) -> Vec<f64> {
        self.nodes.iter().map(|x| x[k]).collect()
    }

    pub fn max_of(&self, k: usize) -> f64 {
        self.nodes.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_of(&self, k: usize) -> f64 {
        self.nodes.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min)
    }

    /// Copy with tiny negative values replaced by zero, for export.
    pub fn clipped(&self) -> SimState {
        let mut s = self.clone();
        for x in &mut s.nodes {
            for v in x.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcPiece {
    pub start: f64,
    pub end: f64,
    pub value: State,
}

/// Piecewise-constant initial data; each piece covers `start <= y < end`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcSpec {
    pub pieces: Vec<IcPiece>,
}

impl IcSpec {
    pub fn split(split_at: f64, left: State, right: State) -> Self {
        Self {
            pieces: vec![
                IcPiece { start: f64::NEG_INFINITY, end: split_at, value: left },
                IcPiece { start: split_at, end: f64::INFINITY, value: right },
            ],
        }
    }

    pub fn uniform(x: State) -> Self {
        Self { pieces: vec![IcPiece { start: f64::NEG_INFINITY, end: f64::INFINITY, value: x }] }
    }

    pub fn build(&self, grid: Grid1D) -> Result<SimState> {
        let mut nodes = Vec::with_capacity(grid.n);
        for i in 0..grid.n {
            let y = grid.y(i);
            let piece = self
                .pieces
                .iter()
                .find(|pc| pc.start <= y && y < pc.end)
                .ok_or_else(|| Error::InvalidConfig(format!("initial data does not cover y = {y}")))?;
            if piece.value.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidConfig("initial values must be finite and nonnegative".into()));
            }
            nodes.push(piece.value);
        }
        Ok(SimState { t: 0.0, grid, nodes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub grid: Grid1D,
    pub t_end: f64,
    pub dt: TimeStep,
    /// Snapshot cadence in days; 0 keeps only the initial and final states.
    pub snapshot_every: f64,
    pub ic: IcSpec,
}

/// Endemic state left of `split_at`, disease-free state from `split_at` on.
pub fn build_paper_ic(grid: Grid1D, p: &ModelParams, split_at: f64) -> Result<SimState> {
    if !(split_at > 0.0 && split_at < grid.length) {
        return Err(Error::InvalidConfig(format!(
            "split_at must lie in (0, {}), got {split_at}",
            grid.length
        )));
    }
    let e1 = endemic_equilibrium(p)?.to_array();
    let e0 = disease_free_equilibrium(p)?.to_array();
    IcSpec::split(split_at, e1, e0).build(grid)
}

/// Explicit step ceiling: the diffusion limit `0.9·dx²/(2·max D)` capped by
/// `0.05 / ρ`, with ρ the largest absolute Jacobian row sum of the kinetics
/// over the box `[0, b1/μ]² × [0, b2/η]²`.
pub fn stable_dt(grid: &Grid1D, p: &ModelParams) -> f64 {
    let diff = 0.9 * grid.dx * grid.dx / (2.0 * p.d_h.max(p.d_v));
    let (h, v) = (p.b1 / p.mu, p.b2 / p.eta);
    let mut rate: f64 = 0.0;
    for mask in 0..16u32 {
        let corner = [
            if mask & 1 != 0 { h } else { 0.0 },
            if mask & 2 != 0 { h } else { 0.0 },
            if mask & 4 != 0 { v } else { 0.0 },
            if mask & 8 != 0 { v } else { 0.0 },
        ];
        // Entries are affine in each coordinate, so their magnitudes peak at corners.
        for row in kinetics_jacobian(&corner, p) {
            rate = rate.max(row.iter().map(|a| a.abs()).sum());
        }
    }
    diff.min(0.05 / rate)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    /// Nominal step.
    pub dt: f64,
    /// Steps between snapshots (0 if only initial and final are kept).
    pub steps_per_snapshot: usize,
    pub total_steps: usize,
    /// Length of the final step (≤ dt), so the run ends exactly at `t_end`.
    pub last_dt: f64,
    pub snapshot_every: f64,
    pub t_end: f64,
}

impl Schedule {
    /// Time after `k` steps, exact at snapshot boundaries and at the end.
    pub fn time_of(&self, k: usize) -> f64 {
        if k >= self.total_steps {
            self.t_end
        } else if self.steps_per_snapshot > 0 && k.is_multiple_of(self.steps_per_snapshot) {
            (k / self.steps_per_snapshot) as f64 * self.snapshot_every
        } else {
            k as f64 * self.dt
        }
    }
}

pub fn schedule(config: &SimConfig, p: &ModelParams) -> Result<Schedule> {
    if !(config.t_end >= 0.0 && config.t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!("t_end must be nonnegative, got {}", config.t_end)));
    }
    if !(config.snapshot_every >= 0.0 && config.snapshot_every.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "snapshot_every must be nonnegative, got {}",
            config.snapshot_every
        )));
    }
    let dt0 = match config.dt {
        TimeStep::Auto => stable_dt(&config.grid, p),
        TimeStep::Fixed(dt) if dt > 0.0 && dt.is_finite() => dt,
        TimeStep::Fixed(dt) => {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")))
        }
    };
    let (dt, steps_per_snapshot) = if config.snapshot_every > 0.0 {
        let k = (config.snapshot_every / dt0).ceil().max(1.0) as usize;
        (config.snapshot_every / k as f64, k)
    } else {
        (dt0, 0)
    };
    let ratio = config.t_end / dt;
    let mut total_steps = ratio.ceil() as usize;
    if total_steps > 0 && (ratio - ratio.round()).abs() < 1e-9 {
        total_steps = ratio.round() as usize;
    }
    let last_dt = if total_steps == 0 {
        0.0
    } else {
        config.t_end - (total_steps - 1) as f64 * dt
    };
    Ok(Schedule {
        dt,
        steps_per_snapshot,
        total_steps,
        last_dt,
        snapshot_every: config.snapshot_every,
        t_end: config.t_end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Physics {
    #[default]
    Full,
    /// Kinetics switched off; used to test the discrete Laplacian in isolation.
    DiffusionOnly,
}

fn rhs(
    u: &[State],
    out: &mut [State],
    p: &ModelParams,
    inv_dx2: f64,
    physics: Physics,
    exec: Exec,
) {
    let n = u.len();
    let d = [p.d_h, p.d_h, p.d_v, p.d_v];
    exec.fill(out, |i| {
        let left = if i == 0 { &u[1] } else { &u[i - 1] };
        let right = if i + 1 == n { &u[n - 2] } else { &u[i + 1] };
        let c = &u[i];
        let mut r = match physics {
            Physics::Full => kinetics(c, p),
            Physics::DiffusionOnly => [0.0; 4],
        };
        for k in 0..4 {
            r[k] += d[k] * (left[k] - 2.0 * c[k] + right[k]) * inv_dx2;
        }
        r
    });
}

fn axpy_into(out: &mut [State], base: &[State], a: f64, k: &[State], exec: Exec) {
    exec.fill(out, |i| {
        let (b, s) = (&base[i], &k[i]);
        [b[0] + a * s[0], b[1] + a * s[1], b[2] + a * s[2], b[3] + a * s[3]]
    });
}

/// Reusable stage buffers for RK4 on a fixed grid.
pub struct Stepper {
    k1: Vec<State>,
    k2: Vec<State>,
    k3: Vec<State>,
    k4: Vec<State>,
    tmp: Vec<State>,
    pub physics: Physics,
    pub exec: Exec,
}

impl Stepper {
    pub fn new(n: usize, physics: Physics, exec: Exec) -> Self {
        let z = vec![[0.0; 4]; n];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z, physics, exec }
    }

    /// Advances `state` in place by `dt`.
    pub fn advance(&mut self, state: &mut SimState, p: &ModelParams, dt: f64) -> Result<()> {
        let n = state.nodes.len();
        if n != self.k1.len() {
            *self = Stepper::new(n, self.physics, self.exec);
        }
        let inv = 1.0 / (state.grid.dx * state.grid.dx);
        let (ph, ex) = (self.physics, self.exec);
        let u = &state.nodes;
        rhs(u, &mut self.k1, p, inv, ph, ex);
        axpy_into(&mut self.tmp, u, 0.5 * dt, &self.k1, ex);
        rhs(&self.tmp, &mut self.k2, p, inv, ph, ex);
        axpy_into(&mut self.tmp, u, 0.5 * dt, &self.k2, ex);
        rhs(&self.tmp, &mut self.k3, p, inv, ph, ex);
        axpy_into(&mut self.tmp, u, dt, &self.k3, ex);
        rhs(&self.tmp, &mut self.k4, p, inv, ph, ex);
        let (k1, k2, k3, k4) = (&self.k1, &self.k2, &self.k3, &self.k4);
        ex.fill(&mut self.tmp, |i| {
            let mut x = u[i];
            for k in 0..4 {
                x[k] += dt / 6.0 * (k1[i][k] + 2.0 * k2[i][k] + 2.0 * k3[i][k] + k4[i][k]);
            }
            x
        });
        let limit = 10.0 * (p.b1 / p.mu + p.b2 / p.eta);
        let bad = self.tmp.iter().any(|x| x.iter().any(|v| !v.is_finite() || v.abs() > limit));
        if bad {
            return Err(Error::InstabilityDetected { t: state.t + dt, last_stable: state.t });
        }
        std::mem::swap(&mut state.nodes, &mut self.tmp);
        state.t += dt;
        Ok(())
    }
}

pub fn step(state: &SimState, p: &ModelParams, dt: f64) -> Result<SimState> {
    step_with(state, p, dt, Physics::Full, Exec::Auto)
}

pub fn step_with(
    state: &SimState,
    p: &ModelParams,
    dt: f64,
    physics: Physics,
    exec: Exec,
) -> Result<SimState> {
    let mut s = state.clone();
    Stepper::new(s.nodes.len(), physics, exec).advance(&mut s, p, dt)?;
    Ok(s)
}

/// Runs the configured experiment, collecting the initial state, every
/// snapshot and the final state.
pub fn run(config: &SimConfig, p: &ModelParams) -> Result<Vec<SimState>> {
    run_with(config, p, Exec::Auto)
}

pub fn run_with(config: &SimConfig, p: &ModelParams, exec: Exec) -> Result<Vec<SimState>> {
    let mut out = Vec::new();
    run_observed(config, p, exec, |s| out.push(s.clone()))?;
    Ok(out)
}

/// Like [`run`] but hands each snapshot to `observe` instead of storing it.
/// Returns the final state.
pub fn run_observed(
    config: &SimConfig,
    p: &ModelParams,
    exec: Exec,
    mut observe: impl FnMut(&SimState),
) -> Result<SimState> {
    p.validate()?;
    let sched = schedule(config, p)?;
    let mut state = config.ic.build(config.grid)?;
    observe(&state);
    let mut stepper = Stepper::new(state.nodes.len(), Physics::Full, exec);
    for k in 1..=sched.total_steps {
        let dt = if k == sched.total_steps { sched.last_dt } else { sched.dt };
        stepper.advance(&mut state, p, dt)?;
        state.t = sched.time_of(k);
        let at_snapshot = sched.steps_per_snapshot > 0 && k.is_multiple_of(sched.steps_per_snapshot);
        if at_snapshot || k == sched.total_steps {
            observe(&state);
        }
    }
    Ok(state)
}
