//! Shared test instances and small helpers.
#![allow(dead_code)] // each harness uses its own subset

use wavestab_core::model::{Params, Poly, SystemSpec};
use wavestab_core::portrait::{classify_portrait, orbit_roots, PhasePortrait};

/// The scalar KdV-type instance: `W = v^3/6 - (c/2) v^2 - lambda v`,
/// portrait at `(c, lambda) = (0, 1/2)` given by `v_s = -1`, `v_0 = 1`,
/// `v_sup = 2`.
pub fn kdv_instance() -> SystemSpec {
    SystemSpec::new_qkdv(
        1.0,
        Poly::new(vec![0.0, 0.0, 0.0, -1.0 / 6.0]),
        Poly::constant(1.0),
        [-4.0, 4.0],
    )
    .unwrap()
}

pub fn kdv_lambda() -> Vec<f64> {
    vec![0.5]
}

/// The 2-component Euler--Korteweg-type instance (`tau = 1`, `b = 1`,
/// cubic `f`): at `(c, lambda) = (1, (3/2, 0))` the potential is
/// `W = v^3/6 + v^2/2 - 3v/2` with `v_s = -3`, `v_0 = 1`, `v_sup = 3`,
/// and nondegenerate slaving `g_v = -1`.
pub fn ek_instance() -> SystemSpec {
    SystemSpec::new_euler_korteweg(
        1.0,
        Poly::new(vec![0.0, 0.0, 0.0, -1.0 / 6.0]),
        Poly::constant(1.0),
        Poly::constant(1.0),
        [-8.0, 8.0],
    )
    .unwrap()
}

pub fn ek_c() -> f64 {
    1.0
}

pub fn ek_lambda() -> Vec<f64> {
    vec![1.5, 0.0]
}

/// Quartic-f Euler--Korteweg family used to hunt for `M'' < 0`.
pub fn ek_quartic(a4: f64) -> SystemSpec {
    SystemSpec::new_euler_korteweg(
        1.0,
        Poly::new(vec![0.0, 0.0, 0.0, -1.0 / 6.0, a4]),
        Poly::constant(1.0),
        Poly::constant(1.0),
        [-6.0, 6.0],
    )
    .unwrap()
}

/// Bisects `mu` in `(mu_0, mu_s)` until the orbit's `rho` hits `target`.
pub fn mu_at_rho(
    sys: &SystemSpec,
    portrait: &PhasePortrait,
    c: f64,
    lambda: &[f64],
    target: f64,
) -> f64 {
    let (mut lo, mut hi) = (portrait.mu_0, portrait.mu_s);
    for _ in 0..200 {
        let mu = 0.5 * (lo + hi);
        let params = Params::new(mu, lambda.to_vec(), c);
        let rho = orbit_roots(sys, &params, portrait)
            .ok()
            .and_then(|o| o.rho);
        match rho {
            Some(r) if r > target => lo = mu,
            _ => hi = mu,
        }
    }
    0.5 * (lo + hi)
}

/// Bisects `mu` until the orbit half-amplitude `delta` hits `target`.
pub fn mu_at_delta(
    sys: &SystemSpec,
    portrait: &PhasePortrait,
    c: f64,
    lambda: &[f64],
    target: f64,
) -> f64 {
    let (mut lo, mut hi) = (portrait.mu_0, portrait.mu_s);
    for _ in 0..200 {
        let mu = 0.5 * (lo + hi);
        let params = Params::new(mu, lambda.to_vec(), c);
        match orbit_roots(sys, &params, portrait) {
            Ok(o) if o.delta < target => lo = mu,
            _ => hi = mu,
        }
    }
    0.5 * (lo + hi)
}

/// Portrait of an instance at its canonical parameters.
pub fn portrait_of(sys: &SystemSpec, c: f64, lambda: &[f64]) -> PhasePortrait {
    classify_portrait(sys, c, lambda).expect("test instance has a valid portrait")
}
