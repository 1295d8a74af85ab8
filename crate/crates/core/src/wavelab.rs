//! Post-processing of simulated fronts: level-set tracking, speed fits,
//! conservation and lower-bound checks, gradient (Harnack-type) bounds,
//! the Lyapunov functional along a profile, and x2/x4 comparability.

use crate::error::{Error, Result};
use crate::model::{endemic_equilibrium, kinetics, ModelParams, State};
use crate::solver::SimState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compartment {
    X1,
    X2,
    X3,
    X4,
}

impl Compartment {
    pub const ALL: [Compartment; 4] = [Self::X1, Self::X2, Self::X3, Self::X4];

    pub fn index(self) -> usize {
        self as usize
    }

    /// From the 1-based compartment number.
    pub fn from_number(k: usize) -> Option<Self> {
        Self::ALL.get(k.checked_sub(1)?).copied()
    }
}

/// Largest y at which the field crosses `level`, scanning from the right
/// boundary and interpolating linearly. `None` unless `level` lies strictly
/// between the field's minimum and maximum.
pub fn front_position(state: &SimState, field: Compartment, level: f64) -> Option<f64> {
    let k = field.index();
    let f: Vec<f64> = state.nodes.iter().map(|x| x[k]).collect();
    let (lo, hi) = (state.min_of(k), state.max_of(k));
    if !(level > lo && level < hi) {
        return None;
    }
    let g = &state.grid;
    for i in (0..f.len() - 1).rev() {
        let (a, b) = (f[i] - level, f[i + 1] - level);
        if b == 0.0 {
            if a != 0.0 {
                return Some(g.y(i + 1));
            }
            continue;
        }
        if (a < 0.0) != (b < 0.0) || a == 0.0 {
            let (ya, yb) = (g.y(i), g.y(i + 1));
            return Some(ya + (level - f[i]) / (f[i + 1] - f[i]) * (yb - ya));
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontTrace {
    pub entries: Vec<(f64, f64)>,
    pub level: f64,
}

impl FrontTrace {
    pub fn new(level: f64) -> Self {
        Self { entries: Vec::new(), level }
    }

    /// Records the front of `state`, if it has one.
    pub fn push(&mut self, state: &SimState, field: Compartment) {
        if let Some(y) = front_position(state, field, self.level) {
            self.entries.push((state.t, y));
        }
    }

    pub fn from_snapshots(snaps: &[SimState], field: Compartment, level: f64) -> Self {
        let mut tr = Self::new(level);
        for s in snaps {
            tr.push(s, field);
        }
        tr
    }
}

/// Default front level x₂**/2.
pub fn default_level(p: &ModelParams) -> Result<f64> {
    Ok(0.5 * endemic_equilibrium(p)?.x2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedEstimate {
    pub speed: f64,
    pub intercept: f64,
    pub fit_window: (f64, f64),
    pub rms_residual: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 5;

/// Least-squares slope of y_front(t) after discarding the first
/// `discard_fraction` of the traced time range.
pub fn estimate_speed(trace: &FrontTrace, discard_fraction: f64) -> Result<SpeedEstimate> {
    let e = &trace.entries;
    let have = |n| Error::InsufficientPoints { needed: MIN_FIT_POINTS, have: n };
    if e.is_empty() {
        return Err(have(0));
    }
    let frac = discard_fraction.clamp(0.0, 1.0);
    let (t0, t1) = (e[0].0, e[e.len() - 1].0);
    let cut = t0 + frac * (t1 - t0);
    let kept: Vec<(f64, f64)> = e.iter().copied().filter(|&(t, _)| t >= cut).collect();
    if kept.len() < MIN_FIT_POINTS {
        return Err(have(kept.len()));
    }
    let n = kept.len() as f64;
    let tm = kept.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = kept.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = kept.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let speed = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = ym - speed * tm;
    let rss: f64 = kept.iter().map(|p| (p.1 - intercept - speed * p.0).powi(2)).sum();
    Ok(SpeedEstimate {
        speed,
        intercept,
        fit_window: (kept[0].0, kept[kept.len() - 1].0),
        rms_residual: (rss / n).sqrt(),
        points: kept.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservationRow {
    pub t: f64,
    pub host_dev: f64,
    pub vector_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConservationReport {
    pub rows: Vec<ConservationRow>,
    /// True when both deviations never grow by more than 1e-10 between
    /// consecutive snapshots.
    pub monotone: bool,
}

pub fn conservation_report(snapshots: &[SimState], p: &ModelParams) -> ConservationReport {
    let (h, v) = (p.b1 / p.mu, p.b2 / p.eta);
    let rows: Vec<ConservationRow> = snapshots
        .iter()
        .map(|s| ConservationRow {
            t: s.t,
            host_dev: s.nodes.iter().map(|x| (x[0] + x[1] - h).abs()).fold(0.0, f64::max),
            vector_dev: s.nodes.iter().map(|x| (x[2] + x[3] - v).abs()).fold(0.0, f64::max),
        })
        .collect();
    let monotone = rows
        .windows(2)
        .all(|w| w[1].host_dev <= w[0].host_dev + 1e-10 && w[1].vector_dev <= w[0].vector_dev + 1e-10);
    ConservationReport { rows, monotone }
}

/// Late-time floors for susceptible hosts and vectors:
/// b1/(μ + β₂b₂/η + β₁b₁/μ) and b2/(η + βb₂/η).
pub fn susceptible_floors(p: &ModelParams) -> (f64, f64) {
    (
        p.b1 / (p.mu + p.beta2 * p.b2 / p.eta + p.beta1 * p.b1 / p.mu),
        p.b2 / (p.eta + p.beta * p.b2 / p.eta),
    )
}

/// A sampled profile with first derivatives by second-order differences
/// (centered inside, one-sided at the ends; uniform spacing assumed there).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub y: Vec<f64>,
    pub x: Vec<State>,
    pub dx: Vec<State>,
}

impl Profile {
    pub fn new(y: Vec<f64>, x: Vec<State>) -> Self {
        let dx = gradient(&y, &x);
        Self { y, x, dx }
    }

    pub fn with_derivatives(y: Vec<f64>, x: Vec<State>, dx: Vec<State>) -> Self {
        Self { y, x, dx }
    }

    pub fn from_state(s: &SimState) -> Self {
        Self::new(s.grid.nodes(), s.nodes.clone())
    }

    /// The same profile in the reflected coordinate z = −y (still listed in
    /// increasing z). Fronts invading to the right become wave profiles with
    /// the disease-free state at −∞.
    pub fn reflected(&self) -> Self {
        let y = self.y.iter().rev().map(|v| -v).collect();
        let x = self.x.iter().rev().copied().collect();
        let dx = self.dx.iter().rev().map(|d| d.map(|v| -v)).collect();
        Self { y, x, dx }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self { y: self.y[range.clone()].to_vec(), x: self.x[range.clone()].to_vec(), dx: self.dx[range].to_vec() }
    }

    /// Longest contiguous run of nodes with every component above `floor`.
    pub fn positive_span(&self, floor: State) -> Option<Self> {
        let mut best = 0..0;
        let mut start = None;
        for i in 0..=self.len() {
            let ok = i < self.len() && (0..4).all(|k| self.x[i][k] > floor[k]);
            match (ok, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if i - s > best.len() {
                        best = s..i;
                    }
                    start = None;
                }
                _ => {}
            }
        }
        (!best.is_empty()).then(|| self.slice(best))
    }
}

fn gradient(y: &[f64], x: &[State]) -> Vec<State> {
    let n = y.len();
    if n < 3 {
        return match n {
            2 => vec![[0, 1, 2, 3].map(|k| (x[1][k] - x[0][k]) / (y[1] - y[0])); 2],
            _ => vec![[0.0; 4]; n],
        };
    }
    (0..n)
        .map(|i| {
            [0, 1, 2, 3].map(|k| {
                if i == 0 {
                    (-3.0 * x[0][k] + 4.0 * x[1][k] - x[2][k]) / (y[2] - y[0])
                } else if i == n - 1 {
                    (3.0 * x[n - 1][k] - 4.0 * x[n - 2][k] + x[n - 3][k]) / (y[n - 1] - y[n - 3])
                } else {
                    (x[i + 1][k] - x[i - 1][k]) / (y[i + 1] - y[i - 1])
                }
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackComponent {
    pub bound: f64,
    pub max_ratio: f64,
    pub at: f64,
    pub violations: usize,
    pub evaluated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackReport {
    pub x2: HarnackComponent,
    pub x4: HarnackComponent,
}

impl HarnackReport {
    pub fn passed(&self) -> bool {
        self.x2.violations == 0 && self.x4.violations == 0
    }
}

/// Gradient bound (√(c² + 4k) + |c|)/(2d).
pub fn harnack_bound(c: f64, k: f64, d: f64) -> f64 {
    ((c * c + 4.0 * k).sqrt() + c.abs()) / (2.0 * d)
}

/// Checks |u'|/u against the bound for x2 (k = μ+φ, d = d_h) and x4
/// (k = η, d = d_v) wherever u > 1e-8; `slack` is a relative allowance.
pub fn harnack_gradient_check(profile: &Profile, c: f64, p: &ModelParams, slack: f64) -> HarnackReport {
    let check = |k: usize, bound: f64| {
        let mut out = HarnackComponent { bound, max_ratio: 0.0, at: f64::NAN, violations: 0, evaluated: 0 };
        for i in 0..profile.len() {
            let u = profile.x[i][k];
            if u <= 1e-8 {
                continue;
            }
            let r = profile.dx[i][k].abs() / u;
            out.evaluated += 1;
            if r > out.max_ratio {
                out.max_ratio = r;
                out.at = profile.y[i];
            }
            if r > bound * (1.0 + slack) {
                out.violations += 1;
            }
        }
        out
    };
    HarnackReport {
        x2: check(1, harnack_bound(c, p.mu + p.phi, p.d_h)),
        x4: check(3, harnack_bound(c, p.eta, p.d_v)),
    }
}

/// Weights (a1, a2, a3, a4) of the Lyapunov functional.
pub fn lyapunov_weights(p: &ModelParams) -> Result<State> {
    let e = endemic_equilibrium(p)?;
    let a12 = p.beta * e.x1 * e.x4;
    let a34 = p.beta2 * e.x3 * e.x2 + p.beta1 * e.x1 * e.x4;
    Ok([a12, a12, a34, a34])
}

fn ell(s: f64) -> f64 {
    s - 1.0 - s.ln()
}

/// Σ aᵢ(1 − xᵢ**/xᵢ)Fᵢ(x); nonpositive on the conservation manifold.
pub fn g_functional(x: &State, p: &ModelParams) -> Result<f64> {
    let a = lyapunov_weights(p)?;
    let e = endemic_equilibrium(p)?.to_array();
    let f = kinetics(x, p);
    Ok((0..4).map(|i| a[i] * (1.0 - e[i] / x[i]) * f[i]).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovReport {
    pub v: Vec<f64>,
    /// Largest single-interval increase of V.
    pub max_increase: f64,
    /// Intervals where V increases by more than the slack.
    pub increases: usize,
    pub fraction_increasing: f64,
    pub slack: f64,
}

impl LyapunovReport {
    pub fn descending(&self) -> bool {
        self.increases == 0
    }
}

/// Samples V(y) = Σ aᵢ(dᵢxᵢ'(xᵢ**/xᵢ − 1) + c·xᵢ**·ℒ(xᵢ/xᵢ**)) along the
/// profile; increases smaller than `rel_slack`·max|V| are tolerated.
pub fn lyapunov_profile(profile: &Profile, c: f64, p: &ModelParams, rel_slack: f64) -> Result<LyapunovReport> {
    for (i, x) in profile.x.iter().enumerate() {
        if let Some(k) = (0..4).find(|&k| !(x[k] > 0.0)) {
            return Err(Error::NonpositiveProfile { component: k + 1, index: i });
        }
    }
    let a = lyapunov_weights(p)?;
    let e = endemic_equilibrium(p)?.to_array();
    let d = [p.d_h, p.d_h, p.d_v, p.d_v];
    let v: Vec<f64> = profile
        .x
        .iter()
        .zip(&profile.dx)
        .map(|(x, dx)| {
            (0..4)
                .map(|i| a[i] * (d[i] * dx[i] * (e[i] / x[i] - 1.0) + c * e[i] * ell(x[i] / e[i])))
                .sum()
        })
        .collect();
    let vmax = v.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let slack = rel_slack * vmax;
    let mut max_increase = f64::NEG_INFINITY;
    let mut increases = 0;
    for w in v.windows(2) {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        if inc > slack {
            increases += 1;
        }
    }
    let intervals = v.len().saturating_sub(1).max(1);
    Ok(LyapunovReport {
        max_increase: if v.len() < 2 { 0.0 } else { max_increase },
        increases,
        fraction_increasing: increases as f64 / intervals as f64,
        slack,
        v,
    })
}

/// m = max over nodes of max(x2/x4, x4/x2).
pub fn comparability_check(profile: &Profile) -> Result<f64> {
    let mut m: f64 = 1.0;
    for (i, x) in profile.x.iter().enumerate() {
        for k in [1, 3] {
            if !(x[k] > 0.0) {
                return Err(Error::NonpositiveProfile { component: k + 1, index: i });
            }
        }
        m = m.max(x[1] / x[3]).max(x[3] / x[1]);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtinctionReport {
    pub x2_ratio: f64,
    pub x4_ratio: f64,
    pub threshold: f64,
    pub extinct: bool,
}

/// Compares the final maxima of x2 and x4 to their initial maxima.
pub fn extinction_check(initial: &SimState, last: &SimState, threshold: f64) -> ExtinctionReport {
    let ratio = |k: usize| {
        let m0 = initial.max_of(k);
        if m0 > 0.0 { last.max_of(k) / m0 } else { 0.0 }
    };
    let (x2_ratio, x4_ratio) = (ratio(1), ratio(3));
    ExtinctionReport { x2_ratio, x4_ratio, threshold, extinct: x2_ratio < threshold && x4_ratio < threshold }
}
