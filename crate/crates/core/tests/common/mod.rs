#![allow(dead_code)]

use epiwave_core::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Every field drawn log-uniformly from [1e-4, 1e2].
pub fn random_params(rng: &mut impl Rng) -> ModelParams {
    let mut v = [0.0; 10];
    for x in v.iter_mut() {
        *x = log_uniform(rng, 1e-4, 1e2);
    }
    from_values(v)
}

pub fn from_values(v: [f64; 10]) -> ModelParams {
    ModelParams {
        mu: v[0],
        eta: v[1],
        phi: v[2],
        beta1: v[3],
        beta2: v[4],
        beta: v[5],
        b1: v[6],
        b2: v[7],
        d_h: v[8],
        d_v: v[9],
    }
}

/// Rejection-samples parameter sets with r0 comfortably above 1.
pub fn random_supercritical(rng: &mut impl Rng) -> ModelParams {
    loop {
        let p = random_params(rng);
        if p.r0() > 1.0 + 1e-6 && p.alpha_max_zero() > 0.0 {
            return p;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
