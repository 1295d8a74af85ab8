//! Parameters, derived scalars, reaction kinetics and rest states of the
//! host-vector model.

use crate::error::{Error, Result};

/// A point in state space: (susceptible hosts, infected hosts, susceptible
/// vectors, infected vectors).
pub type State = [f64; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub mu: f64,
    pub eta: f64,
    pub phi: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta: f64,
    pub b1: f64,
    pub b2: f64,
    pub d_h: f64,
    pub d_v: f64,
}

impl ModelParams {
    /// Reference parameter set used throughout the examples and tests.
    pub fn table2() -> Self {
        Self {
            mu: 0.83,
            eta: 0.001,
            phi: 0.35,
            beta1: 0.005,
            beta2: 0.003,
            beta: 0.0011,
            b1: 100.0,
            b2: 0.1,
            d_h: 0.2,
            d_v: 0.5,
        }
    }

    pub const FIELD_NAMES: [&'static str; 10] = [
        "mu", "eta", "phi", "beta1", "beta2", "beta", "b1", "b2", "d_h", "d_v",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.mu, self.eta, self.phi, self.beta1, self.beta2, self.beta, self.b1, self.b2,
            self.d_h, self.d_v,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in Self::FIELD_NAMES.iter().zip(self.values()) {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams { name, value });
            }
        }
        Ok(())
    }

    pub fn l0(&self) -> f64 {
        self.mu + self.phi - self.beta1 * self.b1 / self.mu
    }

    pub fn l1(&self) -> f64 {
        self.beta * self.beta2 * self.b1 * self.b2 / (self.mu * self.eta)
    }

    /// Host→host coupling entry β₂b₁/μ of the linearization.
    pub fn offdiag_12(&self) -> f64 {
        self.beta2 * self.b1 / self.mu
    }

    /// Vector coupling entry βb₂/η of the linearization.
    pub fn offdiag_21(&self) -> f64 {
        self.beta * self.b2 / self.eta
    }

    pub fn r0(&self) -> f64 {
        let (mu, eta, phi) = (self.mu, self.eta, self.phi);
        self.beta1 * self.b1 / (mu * (mu + phi))
            + self.beta * self.beta2 * self.b1 * self.b2 / (eta * eta * mu * (phi + mu))
    }

    /// Largest eigenvalue of the linearization at the disease-free state with
    /// no spatial variation.
    pub fn alpha_max_zero(&self) -> f64 {
        larger_root_sum_form(-self.l0(), -self.eta, self.l1())
    }
}

/// max root of (m1−α)(m2−α) = l1, computed without cancellation.
pub(crate) fn larger_root_sum_form(m1: f64, m2: f64, l1: f64) -> f64 {
    let s = m1 + m2;
    let r = ((m1 - m2) * (m1 - m2) + 4.0 * l1).sqrt();
    if s >= 0.0 {
        0.5 * (s + r)
    } else {
        // α_max·α_min = m1·m2 − l1, and α_min = (s − r)/2 has no cancellation.
        (m1 * m2 - l1) / (0.5 * (s - r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    pub l0: f64,
    pub l1: f64,
    pub r0: f64,
    pub alpha_max_zero: f64,
}

pub fn derived_quantities(p: &ModelParams) -> Result<DerivedQuantities> {
    p.validate()?;
    Ok(DerivedQuantities {
        l0: p.l0(),
        l1: p.l1(),
        r0: p.r0(),
        alpha_max_zero: p.alpha_max_zero(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl Equilibrium {
    pub fn to_array(self) -> State {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn from_array(x: State) -> Self {
        Self { x1: x[0], x2: x[1], x3: x[2], x4: x[3] }
    }
}

pub fn disease_free_equilibrium(p: &ModelParams) -> Result<Equilibrium> {
    p.validate()?;
    Ok(Equilibrium { x1: p.b1 / p.mu, x2: 0.0, x3: p.b2 / p.eta, x4: 0.0 })
}

/// Coefficients (k0, k1, k2) of the quadratic whose positive root is x₂**.
pub fn endemic_quadratic(p: &ModelParams) -> (f64, f64, f64) {
    let ModelParams { mu, eta, phi, beta1, beta2, beta, b1, b2, .. } = *p;
    let k0 = -mu * eta * eta * (mu + phi) * (p.r0() - 1.0);
    let k1 = phi * beta * eta * mu + eta * eta * beta1 * mu + beta * b2 * beta2 * mu
        + beta * eta * mu * mu
        - beta * b1 * eta * beta1;
    let k2 = beta * eta * beta1 * mu;
    (k0, k1, k2)
}

pub fn endemic_equilibrium(p: &ModelParams) -> Result<Equilibrium> {
    p.validate()?;
    let r0 = p.r0();
    if r0 <= 1.0 + 1e-12 {
        return Err(Error::NoEndemicEquilibrium { r0 });
    }
    let (k0, k1, k2) = endemic_quadratic(p);
    // k0 < 0 < k2: roots have opposite signs. Take the larger-magnitude one
    // first, then recover the other from the product k0/k2.
    let disc = (k1 * k1 - 4.0 * k2 * k0).sqrt();
    let q = -0.5 * (k1 + k1.signum() * disc);
    let (ra, rb) = (q / k2, k0 / q);
    let x2 = if ra > 0.0 { ra } else { rb };
    if !(x2 > 0.0 && x2.is_finite()) {
        return Err(Error::NoEndemicEquilibrium { r0 });
    }
    let ModelParams { mu, eta, phi, beta1, beta2, beta, b2, .. } = *p;
    let s = eta + beta * x2;
    let x3 = b2 / s;
    let x4 = (beta * b2 / eta) * x2 / s;
    let x1 = eta * (mu + phi) * s / (beta1 * eta * s + beta * beta2 * b2);
    Ok(Equilibrium { x1, x2, x3, x4 })
}

pub fn kinetics(x: &State, p: &ModelParams) -> State {
    let [x1, x2, x3, x4] = *x;
    [
        p.b1 - (p.mu + p.beta2 * x4 + p.beta1 * x2) * x1 + p.phi * x2,
        (p.beta1 * x1 - (p.phi + p.mu)) * x2 + p.beta2 * x1 * x4,
        p.b2 - (p.eta + p.beta * x2) * x3,
        p.beta * x2 * x3 - p.eta * x4,
    ]
}

/// Jacobian of [`kinetics`] at `x`, row-major.
pub fn kinetics_jacobian(x: &State, p: &ModelParams) -> [[f64; 4]; 4] {
    let [x1, x2, x3, x4] = *x;
    [
        [-(p.mu + p.beta2 * x4 + p.beta1 * x2), -p.beta1 * x1 + p.phi, 0.0, -p.beta2 * x1],
        [p.beta1 * x2 + p.beta2 * x4, p.beta1 * x1 - (p.phi + p.mu), 0.0, p.beta2 * x1],
        [0.0, -p.beta * x3, -(p.eta + p.beta * x2), 0.0],
        [0.0, p.beta * x3, p.beta * x2, -p.eta],
    ]
}

pub(crate) fn axpy(a: f64, x: &State, y: &State) -> State {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2], y[3] + a * x[3]]
}

fn rk4_step(x: &State, p: &ModelParams, dt: f64) -> State {
    let k1 = kinetics(x, p);
    let k2 = kinetics(&axpy(0.5 * dt, &k1, x), p);
    let k3 = kinetics(&axpy(0.5 * dt, &k2, x), p);
    let k4 = kinetics(&axpy(dt, &k3, x), p);
    let mut out = *x;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn last(&self) -> State {
        *self.states.last().expect("trajectory always holds t=0")
    }
}

/// Fixed-step RK4 for the homogeneous system. The step is shrunk to
/// `t_end / ceil(t_end / dt)` so the last sample lands on `t_end`; every
/// accepted step is recorded.
pub fn integrate_kinetics(x0: State, p: &ModelParams, t_end: f64, dt: f64) -> Result<Trajectory> {
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!("t_end must be nonnegative, got {t_end}")));
    }
    if x0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig("initial state must be finite and nonnegative".into()));
    }
    let steps = (t_end / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0);
    let mut x = x0;
    for k in 1..=steps {
        x = rk4_step(&x, p, h);
        let t = k as f64 * h;
        if x.iter().any(|v| !v.is_finite() || *v < -1e-9) {
            return Err(Error::StepTooLarge { t });
        }
        times.push(t);
        states.push(x);
    }
    Ok(Trajectory { times, states })
}
