//! Linearization at the disease-free state: the 2×2 dispersion matrix, its
//! eigenvalue branches, the speed curve c_λ = α_max(λ)/λ and its minimum,
//! and the quartic spectrum of the first-order traveling-wave system.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionMatrix {
    pub lambda: f64,
    pub m1: f64,
    pub m2: f64,
    pub offdiag_12: f64,
    pub offdiag_21: f64,
}

impl DispersionMatrix {
    pub fn new(lambda: f64, p: &ModelParams) -> Self {
        let l2 = lambda * lambda;
        Self {
            lambda,
            m1: p.d_h * l2 - p.l0(),
            m2: p.d_v * l2 - p.eta,
            offdiag_12: p.offdiag_12(),
            offdiag_21: p.offdiag_21(),
        }
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m1 * v[0] + self.offdiag_12 * v[1],
            self.offdiag_21 * v[0] + self.m2 * v[1],
        ]
    }

    /// Product of the off-diagonal entries (equals l1).
    pub fn coupling(&self) -> f64 {
        self.offdiag_12 * self.offdiag_21
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBranch {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Positive eigenvector for `alpha_max`, first component fixed to 1.
    pub eigvec_max: [f64; 2],
}

pub fn alpha_branches(lambda: f64, p: &ModelParams) -> EigenBranch {
    let m = DispersionMatrix::new(lambda, p);
    let l1 = m.coupling();
    let d = m.m2 - m.m1;
    let r = (d * d + 4.0 * l1).sqrt();
    // Each branch sits g = (r - |d|)/2 beyond the nearer diagonal entry.
    let g = 2.0 * l1 / (r + d.abs());
    let (alpha_min, alpha_max) = (m.m1.min(m.m2) - g, m.m1.max(m.m2) + g);
    // α_max − m1 = (d + r)/2, rewritten when d < 0 to avoid cancellation.
    let gap = if d >= 0.0 { 0.5 * (d + r) } else { g };
    EigenBranch { alpha_min, alpha_max, eigvec_max: [1.0, gap / m.offdiag_12] }
}

pub fn alpha_max(lambda: f64, p: &ModelParams) -> f64 {
    alpha_branches(lambda, p).alpha_max
}

/// dα_max/dλ in closed form.
pub fn alpha_max_derivative(lambda: f64, p: &ModelParams) -> f64 {
    let m = DispersionMatrix::new(lambda, p);
    let d = m.m1 - m.m2;
    let r = (d * d + 4.0 * m.coupling()).sqrt();
    lambda * ((p.d_h + p.d_v) + (p.d_h - p.d_v) * d / r)
}

pub fn wave_speed_at(lambda: f64, p: &ModelParams) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveLambda(lambda));
    }
    Ok(speed(lambda, p))
}

#[inline]
fn speed(lambda: f64, p: &ModelParams) -> f64 {
    alpha_max(lambda, p) / lambda
}

/// λα'_max(λ) − α_max(λ); zero exactly at the minimiser of c_λ and
/// increasing in λ.
fn first_order(lambda: f64, p: &ModelParams) -> f64 {
    lambda * alpha_max_derivative(lambda, p) - alpha_max(lambda, p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub c_lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionResult {
    pub c_star: f64,
    pub lambda_star: f64,
    pub curve: Vec<CurvePoint>,
}

pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

pub fn sample_curve(p: &ModelParams, lambdas: &[f64], exec: Exec) -> Vec<CurvePoint> {
    exec.map(lambdas.len(), |i| {
        let lambda = lambdas[i];
        let b = alpha_branches(lambda, p);
        CurvePoint { lambda, alpha_min: b.alpha_min, alpha_max: b.alpha_max, c_lambda: b.alpha_max / lambda }
    })
}

pub const CURVE_SAMPLES: usize = 201;

pub fn minimal_wave_speed(p: &ModelParams) -> Result<DispersionResult> {
    minimal_wave_speed_with(p, Exec::Auto)
}

pub fn minimal_wave_speed_with(p: &ModelParams, exec: Exec) -> Result<DispersionResult> {
    p.validate()?;
    let a0 = p.alpha_max_zero();
    if !(a0 > 0.0) {
        return Err(Error::SubcriticalR0 { alpha_max_zero: a0 });
    }
    let lambda_star = locate_minimum(p);
    let c_star = speed(lambda_star, p);
    let curve = sample_curve(p, &logspace(lambda_star * 1e-2, lambda_star * 1e2, CURVE_SAMPLES), exec);
    Ok(DispersionResult { c_star, lambda_star, curve })
}

fn locate_minimum(p: &ModelParams) -> f64 {
    let c = |l: f64| speed(l, p);

    let mut lo = 1e-6;
    while first_order(lo, p) >= 0.0 && lo > 1e-300 {
        lo *= 0.5;
    }
    let mut hi = 1.0;
    while first_order(hi, p) <= 0.0 && hi < 1e300 {
        hi *= 2.0;
    }

    // Golden-section on the bracket.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (c(x1), c(x2));
    for _ in 0..500 {
        if b - a <= 1e-10 * 0.5 * (a + b) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = c(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = c(x2);
        }
    }

    // c_λ is flat at its minimum, so polish on the first-order condition.
    let guess = 0.5 * (a + b);
    let (mut lo, mut hi) = (guess, guess);
    let mut w = 1e-6 * guess;
    while first_order(lo, p) > 0.0 && lo > 0.0 {
        lo = (guess - w).max(guess * 1e-3);
        w *= 4.0;
    }
    w = 1e-6 * guess;
    while first_order(hi, p) < 0.0 {
        hi = guess + w;
        w *= 4.0;
    }
    bisect(lo, hi, |l| first_order(l, p))
}

/// Bisection for an increasing sign change of `f` on `[lo, hi]`
/// (f(lo) ≤ 0 ≤ f(hi)), run to floating-point adjacency.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Brute-force minimum of c_λ over `n` log-spaced points of `[lo, hi]`.
pub fn grid_minimum(p: &ModelParams, lo: f64, hi: f64, n: usize, exec: Exec) -> (f64, f64) {
    let (la, lb) = (lo.ln(), hi.ln());
    let step = if n > 1 { (lb - la) / (n - 1) as f64 } else { 0.0 };
    let cs = exec.map(n, |i| {
        let l = (la + step * i as f64).exp();
        (l, speed(l, p))
    });
    cs.into_iter()
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// The two solutions of c_λ = c, on either side of λ*.
pub fn lambda_roots(c: f64, p: &ModelParams) -> Result<(f64, f64)> {
    let res = minimal_wave_speed_with(p, Exec::Sequential)?;
    lambda_roots_given(c, p, &res)
}

pub fn lambda_roots_given(c: f64, p: &ModelParams, res: &DispersionResult) -> Result<(f64, f64)> {
    if !(c > res.c_star) {
        return Err(Error::SpeedNotSupercritical { c, c_star: res.c_star });
    }
    let ls = res.lambda_star;
    let mut lo = 0.5 * ls;
    while speed(lo, p) <= c {
        lo *= 0.5;
    }
    let mut hi = 2.0 * ls;
    while speed(hi, p) <= c {
        hi *= 2.0;
    }
    let lambda_min = bisect(lo, ls, |l| c - speed(l, p));
    let lambda_max = bisect(ls, hi, |l| speed(l, p) - c);
    Ok((lambda_min, lambda_max))
}

/// First-order form (x₂, x₄, x₂', x₄')' = 𝕄(x₂, x₄, x₂', x₄') of the
/// linearized co-moving equations.
pub fn wave_ode_matrix(c: f64, p: &ModelParams) -> [[f64; 4]; 4] {
    let (dh, dv) = (p.d_h, p.d_v);
    [
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [p.l0() / dh, -p.offdiag_12() / dh, c / dh, 0.0],
        [-p.offdiag_21() / dv, p.eta / dv, 0.0, c / dv],
    ]
}

/// Monomial coefficients of the characteristic polynomial of 𝕄,
/// ascending (`coeffs[k]` multiplies λ^k), monic.
pub fn wave_ode_quartic(c: f64, p: &ModelParams) -> [f64; 5] {
    let (dh, dv, eta, l0) = (p.d_h, p.d_v, p.eta, p.l0());
    let dd = dh * dv;
    [
        (l0 * eta - p.l1()) / dd,
        c * (eta + l0) / dd,
        c * c / dd - eta / dv - l0 / dh,
        -(c / dh + c / dv),
        1.0,
    ]
}

pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Min,
    Max,
    Unclassified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveOdeSpectrum {
    pub c: f64,
    pub quartic_coeffs: [f64; 5],
    pub real_eigenvalues: Vec<f64>,
    pub classification: Vec<Branch>,
}

pub const SCAN_POINTS: usize = 10_000;
pub const CLASSIFY_TOL: f64 = 1e-8;

pub fn wave_ode_spectrum(c: f64, p: &ModelParams) -> WaveOdeSpectrum {
    let coeffs = wave_ode_quartic(c, p);
    // Same sign as P and much better conditioned near the roots.
    let q = |l: f64| {
        let m = DispersionMatrix::new(l, p);
        (m.m1 - l * c) * (m.m2 - l * c) - m.coupling()
    };
    let bound = 1.0 + coeffs[..4].iter().map(|a| a.abs()).fold(0.0, f64::max);
    let grid = |i: usize| -bound + 2.0 * bound * i as f64 / SCAN_POINTS as f64;

    let mut roots = Vec::new();
    let mut prev_x = grid(0);
    let mut prev = q(prev_x);
    for i in 1..=SCAN_POINTS {
        let x = if i == SCAN_POINTS / 2 { 0.0 } else { grid(i) };
        let v = q(x);
        if v == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && (prev < 0.0) != (v < 0.0) {
            let root = if prev < 0.0 {
                bisect(prev_x, x, q)
            } else {
                bisect(prev_x, x, |l| -q(l))
            };
            roots.push(root);
        }
        prev_x = x;
        prev = v;
    }

    let classification = roots.iter().map(|&l| classify(l, c, p)).collect();
    WaveOdeSpectrum { c, quartic_coeffs: coeffs, real_eigenvalues: roots, classification }
}

/// Which eigenvalue branch of the dispersion matrix λc coincides with.
pub fn classify(lambda: f64, c: f64, p: &ModelParams) -> Branch {
    let b = alpha_branches(lambda, p);
    let target = lambda * c;
    let scale = b.alpha_min.abs().max(b.alpha_max.abs()).max(target.abs());
    let dmin = (target - b.alpha_min).abs();
    let dmax = (target - b.alpha_max).abs();
    if dmin <= CLASSIFY_TOL * scale && dmin <= dmax {
        Branch::Min
    } else if dmax <= CLASSIFY_TOL * scale {
        Branch::Max
    } else {
        Branch::Unclassified
    }
}
