//! Exponential upper and lower wave profiles, their admissibility
//! constraints, pointwise residual checks, and the oscillating solution used
//! to rule out slow waves.

use crate::dispersion::{alpha_branches, lambda_roots_given, minimal_wave_speed_with, DispersionResult};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::ModelParams;

/// Safety factor applied to every lower bound.
pub const MARGIN: f64 = 1.01;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateParams {
    pub lambda: f64,
    pub kappa: f64,
    pub lambda_tilde: f64,
    pub a: f64,
    pub b: f64,
}

impl CertificateParams {
    pub fn new(lambda: f64, kappa: f64, lambda_tilde: f64, a: f64, b: f64) -> Result<Self> {
        let named = [("lambda", lambda), ("kappa", kappa), ("lambda_tilde", lambda_tilde), ("A", a), ("B", b)];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidCertificate(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(Self { lambda, kappa, lambda_tilde, a, b })
    }
}

/// Eigenvector components (first component of the pair is k2, second k4).
fn eigvec(lambda: f64, p: &ModelParams) -> (f64, f64) {
    let v = alpha_branches(lambda, p).eigvec_max;
    (v[0], v[1])
}

/// All lower bounds entering the admissibility constraints, for a given
/// choice of λ, λ̃, κ and A.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub a_terms: Vec<f64>,
    pub b_terms: Vec<f64>,
    pub b0: f64,
}

impl Bounds {
    pub fn a_min(&self) -> f64 {
        self.a_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
    pub fn b_min(&self) -> f64 {
        self.b_terms.iter().copied().fold(self.b0, f64::max)
    }
}

pub fn a_bound_terms(lambda: f64, p: &ModelParams) -> Vec<f64> {
    let (k2, k4) = eigvec(lambda, p);
    vec![
        1.0,
        p.b1 * (p.beta2 * k4 + p.beta1 * k2) / (p.mu * p.mu),
        p.eta * p.mu / (p.b2 * k2),
        p.beta * p.b2 * k2 / (p.eta * p.eta),
    ]
}

fn separation(cert: &CertificateParams, b: f64, p: &ModelParams) -> f64 {
    let (k2, k4) = eigvec(cert.lambda, p);
    let (k2k, k4k) = eigvec(cert.lambda + cert.kappa, p);
    let lhs = (b * k2k / k2).ln().min((b * k4k / k4).ln()) / cert.kappa;
    let rhs = (cert.a / (p.b1 / p.mu)).ln().max((cert.a / (p.b2 / p.eta)).ln()) / cert.lambda_tilde;
    lhs - rhs
}

/// Smallest power of two B for which the decay of the lower profile's
/// correction term is separated from the support of the x1/x3 profiles.
pub fn b0(cert: &CertificateParams, p: &ModelParams) -> f64 {
    let mut b = 1.0;
    while separation(cert, b, p) <= 0.0 && b < 1e300 {
        b *= 2.0;
    }
    b
}

pub fn b_bound_terms(c: f64, cert: &CertificateParams, p: &ModelParams) -> Vec<f64> {
    let (lam, kap, a) = (cert.lambda, cert.kappa, cert.a);
    let (k2, k4) = eigvec(lam, p);
    let (k2k, k4k) = eigvec(lam + kap, p);
    let c_lk = alpha_branches(lam + kap, p).alpha_max / (lam + kap);
    let den = (lam + kap) * (c - c_lk);
    vec![
        1.0,
        a * (p.beta1 * k2 + p.beta2 * k4k) / (den * k2k),
        a * p.beta * k2 / (den * k4k),
        a * (p.beta1 * k2 + p.beta2 * k4) / (den * k2k),
    ]
}

pub fn bounds(c: f64, cert: &CertificateParams, p: &ModelParams) -> Bounds {
    Bounds {
        a_terms: a_bound_terms(cert.lambda, p),
        b_terms: b_bound_terms(c, cert, p),
        b0: b0(cert, p),
    }
}

pub fn default_certificate(c: f64, p: &ModelParams) -> Result<CertificateParams> {
    let res = minimal_wave_speed_with(p, Exec::Sequential)?;
    default_certificate_given(c, p, &res)
}

pub fn default_certificate_given(c: f64, p: &ModelParams, res: &DispersionResult) -> Result<CertificateParams> {
    let (lambda, _) = lambda_roots_given(c, p, res)?;
    let lambda_tilde = lambda.min(c / (p.d_h + p.d_v));
    let a = MARGIN * a_bound_terms(lambda, p).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let kappa = 0.5 * lambda_tilde.min(res.lambda_star - lambda);
    let mut cert = CertificateParams::new(lambda, kappa, lambda_tilde, a, 1.0)?;
    let bmax = b_bound_terms(c, &cert, p).into_iter().fold(b0(&cert, p), f64::max);
    cert.b = MARGIN * bmax;
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Re-evaluates every admissibility constraint of `cert` at speed `c`.
pub fn check_constraints(c: f64, cert: &CertificateParams, p: &ModelParams) -> Result<Vec<ConstraintCheck>> {
    let res = minimal_wave_speed_with(p, Exec::Sequential)?;
    let c_lam = alpha_branches(cert.lambda, p).alpha_max / cert.lambda;
    let bd = bounds(c, cert, p);
    let gap = res.lambda_star - cert.lambda;
    let mut out = vec![
        ConstraintCheck { name: "lambda_below_star", value: cert.lambda, bound: res.lambda_star, ok: cert.lambda < res.lambda_star },
        ConstraintCheck {
            name: "lambda_tilde_max",
            value: cert.lambda_tilde,
            bound: cert.lambda.min(c_lam / (p.d_h + p.d_v)),
            ok: cert.lambda_tilde <= cert.lambda.min(c_lam / (p.d_h + p.d_v)) * (1.0 + 1e-12),
        },
        ConstraintCheck {
            name: "kappa_max",
            value: cert.kappa,
            bound: cert.lambda_tilde.min(gap),
            ok: cert.kappa < cert.lambda_tilde.min(gap),
        },
        ConstraintCheck { name: "a_min", value: cert.a, bound: bd.a_min(), ok: cert.a >= bd.a_min() },
        ConstraintCheck { name: "b_min", value: cert.b, bound: bd.b_min(), ok: cert.b >= bd.b_min() },
    ];
    let sep = separation(cert, cert.b, p);
    out.push(ConstraintCheck { name: "b0_separation", value: sep, bound: 0.0, ok: sep > 0.0 });
    Ok(out)
}

/// Upper and lower profiles with exact derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveProfilePair {
    pub cert: CertificateParams,
    pub k2_lambda: f64,
    pub k4_lambda: f64,
    pub k2_lambda_kappa: f64,
    pub k4_lambda_kappa: f64,
    s1: f64,
    s3: f64,
}

/// Value, first and second derivative of one profile component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    fn exp(coef: f64, rate: f64, y: f64) -> Jet {
        let v = coef * (rate * y).exp();
        Jet { v, d1: rate * v, d2: rate * rate * v }
    }
    fn sub(self, o: Jet) -> Jet {
        Jet { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
    fn positive_part(self) -> Jet {
        if self.v > 0.0 { self } else { Jet { v: 0.0, d1: 0.0, d2: 0.0 } }
    }
    fn constant(v: f64) -> Jet {
        Jet { v, d1: 0.0, d2: 0.0 }
    }
}

impl WaveProfilePair {
    pub fn new(cert: CertificateParams, p: &ModelParams) -> Self {
        let (k2, k4) = eigvec(cert.lambda, p);
        let (k2k, k4k) = eigvec(cert.lambda + cert.kappa, p);
        Self {
            cert,
            k2_lambda: k2,
            k4_lambda: k4,
            k2_lambda_kappa: k2k,
            k4_lambda_kappa: k4k,
            s1: p.b1 / p.mu,
            s3: p.b2 / p.eta,
        }
    }

    pub fn upper_jets(&self, y: f64) -> [Jet; 4] {
        let l = self.cert.lambda;
        [
            Jet::constant(self.s1),
            Jet::exp(self.k2_lambda, l, y),
            Jet::constant(self.s3),
            Jet::exp(self.k4_lambda, l, y),
        ]
    }

    pub fn lower_jets(&self, y: f64) -> [Jet; 4] {
        let CertificateParams { lambda: l, kappa: k, lambda_tilde: lt, a, b } = self.cert;
        let tail = Jet::exp(a, lt, y);
        [
            Jet::constant(self.s1).sub(tail).positive_part(),
            Jet::exp(self.k2_lambda, l, y).sub(Jet::exp(b * self.k2_lambda_kappa, l + k, y)).positive_part(),
            Jet::constant(self.s3).sub(tail).positive_part(),
            Jet::exp(self.k4_lambda, l, y).sub(Jet::exp(b * self.k4_lambda_kappa, l + k, y)).positive_part(),
        ]
    }

    pub fn upper(&self, y: f64) -> [f64; 4] {
        self.upper_jets(y).map(|j| j.v)
    }

    pub fn lower(&self, y: f64) -> [f64; 4] {
        self.lower_jets(y).map(|j| j.v)
    }

    /// Points where each lower component switches between its formula and 0.
    pub fn kinks(&self) -> [f64; 4] {
        let CertificateParams { kappa: k, lambda_tilde: lt, a, b, .. } = self.cert;
        [
            (self.s1 / a).ln() / lt,
            (self.k2_lambda / (b * self.k2_lambda_kappa)).ln() / k,
            (self.s3 / a).ln() / lt,
            (self.k4_lambda / (b * self.k4_lambda_kappa)).ln() / k,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualEntry {
    pub name: &'static str,
    /// Worst value: largest magnitude for identities, smallest value for
    /// inequalities, the margin itself for scalar checks.
    pub worst: f64,
    /// Grid location of the worst value (NaN for scalar checks).
    pub at: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

pub const IDENTITY_NAMES: [&str; 4] =
    ["identity_lambda_x2", "identity_lambda_x4", "identity_lambda_kappa_x2", "identity_lambda_kappa_x4"];
pub const INEQUALITY_NAMES: [&str; 4] = ["lower_x1", "lower_x3", "lower_x2", "lower_x4"];

/// Evaluates the linear identities, the four lower-profile inequalities,
/// ordering of the profiles and the B₀ separation on `y_grid`.
pub fn verify_supersub(cert: &CertificateParams, c: f64, p: &ModelParams, y_grid: &[f64]) -> ResidualReport {
    let pair = WaveProfilePair::new(*cert, p);
    let (dh, dv) = (p.d_h, p.d_v);
    let (lam, lk) = (cert.lambda, cert.lambda + cert.kappa);
    let c_lam = alpha_branches(lam, p).alpha_max / lam;
    let c_lk = alpha_branches(lk, p).alpha_max / lk;
    let (l0, eta, o12, o21) = (p.l0(), p.eta, p.offdiag_12(), p.offdiag_21());

    let spacing = y_grid.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let kinks = pair.kinks();
    let near_kink = |i: usize, y: f64| (y - kinks[i]).abs() <= spacing;

    let mut ident = [(0.0f64, f64::NAN); 4];
    let mut ineq = [(f64::INFINITY, f64::NAN); 4];
    let mut order = (f64::INFINITY, f64::NAN);

    for &y in y_grid {
        let linear = |k2: f64, k4: f64, rate: f64, speed: f64| {
            let (u2, u4) = (Jet::exp(k2, rate, y), Jet::exp(k4, rate, y));
            [
                dh * u2.d2 - speed * u2.d1 - l0 * u2.v + o12 * u4.v,
                dv * u4.d2 - speed * u4.d1 - eta * u4.v + o21 * u2.v,
            ]
        };
        let r_l = linear(pair.k2_lambda, pair.k4_lambda, lam, c_lam);
        let r_lk = linear(pair.k2_lambda_kappa, pair.k4_lambda_kappa, lk, c_lk);
        for (slot, r) in ident.iter_mut().zip([r_l[0], r_l[1], r_lk[0], r_lk[1]]) {
            if r.abs() > slot.0 || slot.1.is_nan() {
                *slot = (r.abs(), y);
            }
        }

        let up = pair.upper(y);
        let [x1, x2, x3, x4] = pair.lower_jets(y);
        let res = [
            dh * x1.d2 - c * x1.d1 + p.b1 - (p.mu + p.beta2 * up[3] + p.beta1 * up[1]) * x1.v,
            dv * x3.d2 - c * x3.d1 + p.b2 - (p.eta + p.beta * up[1]) * x3.v,
            dh * x2.d2 - c * x2.d1 + (p.beta1 * x1.v - (p.phi + p.mu)) * x2.v + p.beta2 * x1.v * x4.v,
            dv * x4.d2 - c * x4.d1 - p.eta * x4.v + p.beta * x2.v * x3.v,
        ];
        // Residual slot order follows INEQUALITY_NAMES: x1, x3, x2, x4.
        let comp = [0, 2, 1, 3];
        for (j, r) in res.into_iter().enumerate() {
            if near_kink(comp[j], y) {
                continue;
            }
            if r < ineq[j].0 {
                ineq[j] = (r, y);
            }
        }

        let low = [x1.v, x2.v, x3.v, x4.v];
        for k in 0..4 {
            let gap = up[k] - low[k];
            if gap < order.0 {
                order = (gap, y);
            }
        }
    }

    let mut entries = Vec::new();
    for (name, (w, at)) in IDENTITY_NAMES.iter().zip(ident) {
        entries.push(ResidualEntry { name, worst: w, at, ok: w <= RESIDUAL_TOL });
    }
    for (name, (w, at)) in INEQUALITY_NAMES.iter().zip(ineq) {
        let w = if w.is_infinite() { 0.0 } else { w };
        entries.push(ResidualEntry { name, worst: w, at, ok: w >= -RESIDUAL_TOL });
    }
    let order_w = if order.0.is_infinite() { 0.0 } else { order.0 };
    entries.push(ResidualEntry { name: "ordering", worst: order_w, at: order.1, ok: order_w >= 0.0 });
    let sep = separation(cert, cert.b, p);
    entries.push(ResidualEntry { name: "b0_separation", worst: sep, at: f64::NAN, ok: sep > 0.0 });
    ResidualReport { entries }
}

/// Default verification grid: `n` uniform points on `[−5/κ, 5/λ̃]`.
pub fn default_grid(cert: &CertificateParams, n: usize) -> Vec<f64> {
    let (a, b) = (-5.0 / cert.kappa, 5.0 / cert.lambda_tilde);
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatingSolution {
    pub alpha: f64,
    pub gamma_tilde: f64,
    /// Half-width of the positivity interval; h(±L) = 0.
    pub l: f64,
    pub samples: Vec<(f64, f64)>,
    pub max_residual: f64,
    eps: f64,
    gamma: f64,
    d: f64,
}

impl OscillatingSolution {
    fn rates(&self) -> (f64, f64) {
        (self.gamma / (2.0 * self.d), self.gamma_tilde / (2.0 * self.d))
    }

    pub fn h(&self, y: f64) -> f64 {
        let (a, b) = self.rates();
        (a * y).exp() * (b * y).cos()
    }

    /// (h, h', h'') at y.
    pub fn jet(&self, y: f64) -> (f64, f64, f64) {
        let (a, b) = self.rates();
        let (e, cs, sn) = ((a * y).exp(), (b * y).cos(), (b * y).sin());
        (e * cs, e * (a * cs - b * sn), e * ((a * a - b * b) * cs - 2.0 * a * b * sn))
    }

    pub fn epsilon(&self) -> f64 {
        self.eps
    }
}

/// α of the oscillating construction: the positive root of
/// α²·(β₂b₁/μ) + (η − l0)α − βb₂/η.
pub fn oscillation_alpha(p: &ModelParams) -> f64 {
    (p.alpha_max_zero() + p.l0()) / p.offdiag_12()
}

pub fn lemma52_h(epsilon: f64, gamma: f64, d: f64, p: &ModelParams) -> Result<OscillatingSolution> {
    p.validate()?;
    if p.d_h != d || p.d_v != d {
        return Err(Error::UnequalDiffusion);
    }
    let a0 = p.alpha_max_zero();
    let alpha = oscillation_alpha(p);
    if !(epsilon > 0.0 && epsilon < a0 / (1.0 + alpha)) {
        return Err(Error::BadEpsilon(epsilon));
    }
    let room = 4.0 * d * (a0 - epsilon * (1.0 + alpha));
    if !(gamma > 0.0 && gamma * gamma < room) {
        return Err(Error::BadGamma(gamma));
    }
    let gamma_tilde = (room - gamma * gamma).sqrt();
    let l = d * std::f64::consts::PI / gamma_tilde;
    let mut sol = OscillatingSolution {
        alpha,
        gamma_tilde,
        l,
        samples: Vec::new(),
        max_residual: 0.0,
        eps: epsilon,
        gamma,
        d,
    };
    let coef = -(p.l0() + epsilon) + (p.offdiag_12() - epsilon) * alpha;
    let n = 401;
    for i in 1..n {
        let y = -l + 2.0 * l * i as f64 / n as f64;
        let (h, h1, h2) = sol.jet(y);
        let r = d * h2 - gamma * h1 + coef * h;
        sol.max_residual = sol.max_residual.max(r.abs());
        sol.samples.push((y, h));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table2() -> ModelParams {
        ModelParams::table2()
    }

    #[test]
    fn default_values_at_half() {
        let p = table2();
        let cert = default_certificate(0.5, &p).unwrap();
        assert!((cert.lambda - 0.14142).abs() < 1e-4);
        assert!((cert.kappa - 0.070708).abs() < 1e-5);
        assert!((cert.a - 111.1).abs() < 0.1);
        assert!((cert.b - 49.67).abs() < 0.05);
        for chk in check_constraints(0.5, &cert, &p).unwrap() {
            assert!(chk.ok, "{chk:?}");
        }
    }

    #[test]
    fn default_passes_on_both_grids() {
        let p = table2();
        for c in [0.4, 0.5, 1.0] {
            let cert = default_certificate(c, &p).unwrap();
            let rep = verify_supersub(&cert, c, &p, &default_grid(&cert, 2001));
            assert!(rep.all_ok(), "c={c}: {rep:?}");
        }
        let cert = default_certificate(0.5, &p).unwrap();
        let grid: Vec<f64> = (0..2001).map(|i| -200.0 + 250.0 * i as f64 / 2000.0).collect();
        let rep = verify_supersub(&cert, 0.5, &p, &grid);
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn a_at_its_bound_still_passes() {
        let p = table2();
        let mut cert = default_certificate(0.5, &p).unwrap();
        cert.a = a_bound_terms(cert.lambda, &p).into_iter().fold(0.0, f64::max);
        cert.b = MARGIN * b_bound_terms(0.5, &cert, &p).into_iter().fold(b0(&cert, &p), f64::max);
        let rep = verify_supersub(&cert, 0.5, &p, &default_grid(&cert, 2001));
        assert!(rep.all_ok(), "{rep:?}");
    }

    #[test]
    fn undersized_b_is_caught() {
        let p = table2();
        for c in [0.4, 0.5, 1.0] {
            let mut cert = default_certificate(c, &p).unwrap();
            cert.b /= 100.0;
            let rep = verify_supersub(&cert, c, &p, &default_grid(&cert, 2001));
            let x2 = rep.get("lower_x2").unwrap();
            let x4 = rep.get("lower_x4").unwrap();
            assert!(!x2.ok || !x4.ok, "c={c}: {rep:?}");
        }
    }

    #[test]
    fn zero_kappa_rejected() {
        assert!(matches!(CertificateParams::new(0.1, 0.0, 0.1, 2.0, 2.0), Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn slow_speed_rejected() {
        assert!(matches!(default_certificate(0.3, &table2()), Err(Error::SpeedNotSupercritical { .. })));
    }

    #[test]
    fn profiles_ordered_and_vanish_far_left() {
        let p = table2();
        let cert = default_certificate(0.5, &p).unwrap();
        let pair = WaveProfilePair::new(cert, &p);
        for i in 0..=1000 {
            let y = -300.0 + 0.4 * i as f64;
            let (u, l) = (pair.upper(y), pair.lower(y));
            for k in 0..4 {
                assert!(l[k] >= 0.0 && l[k] <= u[k]);
            }
        }
        let y = -1e3;
        let (u, l) = (pair.upper(y), pair.lower(y));
        let bound = (cert.lambda * y).exp() * 2.0;
        assert!(u[1] <= bound * pair.k2_lambda && u[3] <= bound * pair.k4_lambda);
        assert!(l[1] <= bound * pair.k2_lambda && l[3] <= bound * pair.k4_lambda);
    }

    #[test]
    fn alpha_solves_its_quadratic() {
        let p = table2();
        let a = oscillation_alpha(&p);
        let r = a * a * p.offdiag_12() + (p.eta - p.l0()) * a - p.offdiag_21();
        assert!(a > 0.0);
        assert!(r.abs() <= 1e-12 * p.offdiag_21());
    }

    #[test]
    fn oscillating_solution() {
        let mut p = table2();
        p.d_h = 0.35;
        p.d_v = 0.35;
        let s = lemma52_h(0.01, 0.1, 0.35, &p).unwrap();
        assert!(s.max_residual <= 1e-10);
        assert!(s.samples.iter().all(|&(_, h)| h > 0.0));
        assert!(s.h(s.l).abs() < 1e-12 && s.h(-s.l).abs() < 1e-12);
        let lhs = s.gamma_tilde.powi(2) + 0.01;
        let rhs = 4.0 * 0.35 * (p.alpha_max_zero() - 0.01 * (1.0 + s.alpha));
        assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn oscillating_preconditions() {
        let mut p = table2();
        assert_eq!(lemma52_h(0.01, 0.1, 0.35, &p), Err(Error::UnequalDiffusion));
        p.d_h = 0.35;
        p.d_v = 0.35;
        assert_eq!(lemma52_h(1.0, 0.1, 0.35, &p), Err(Error::BadEpsilon(1.0)));
        assert_eq!(lemma52_h(0.01, 10.0, 0.35, &p), Err(Error::BadGamma(10.0)));
    }
}
