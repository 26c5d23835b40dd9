//! Phase-portrait skeleton and orbit roots.
//!
//! For fixed `(c, lambda)` the basic portrait consists of a saddle `v_s`
//! and a center `v_0` of the potential `W`, with `v_s < v_0`, together
//! with the conjugate point `v_sup > v_0` where `W` re-attains the saddle
//! level `mu_s`. Periodic orbits live at levels `mu` in `(mu_0, mu_s)` and
//! are bounded by the roots `v_2 < v_3` of `mu - W`; near the soliton
//! limit a third root `v_1 < v_s` enters the expansions.

use serde::Serialize;

use crate::model::{Params, SystemSpec};
use crate::{Error, Result};

/// Grid resolution for critical-point bracketing over the domain.
const BRACKET_SAMPLES: usize = 2048;
/// Samples used to verify the monotonicity pattern of `W_v`.
const PATTERN_SAMPLES: usize = 256;
const MAX_NEWTON: usize = 30;

/// Validated saddle/center/conjugate skeleton at fixed `(c, lambda)`.
#[derive(Debug, Clone, Serialize)]
pub struct PhasePortrait {
    pub v_s: f64,
    pub v_0: f64,
    /// The conjugate point, `W(v_sup) = mu_s` with `W_v(v_sup) > 0`.
    pub v_sup: f64,
    pub mu_0: f64,
    pub mu_s: f64,
    pub c: f64,
    pub lambda: Vec<f64>,
}

impl PhasePortrait {
    /// Saddle-to-conjugate width `h_s = v_sup - v_s`.
    pub fn h_s(&self) -> f64 {
        self.v_sup - self.v_s
    }
}

/// Roots of `mu - W` for one periodic orbit and derived scalars.
#[derive(Debug, Clone, Serialize)]
pub struct OrbitData {
    /// Left outer root, absent when `W` does not re-attain `mu` left of
    /// the saddle inside the domain.
    pub v1: Option<f64>,
    pub v2: f64,
    pub v3: f64,
    /// `(v2 - v1)/(v3 - v2)`, the soliton-limit small parameter.
    pub rho: Option<f64>,
    /// Half-amplitude `(v3 - v2)/2`, the harmonic-limit small parameter.
    pub delta: f64,
    /// Midpoint `(v2 + v3)/2`.
    pub m: f64,
    /// `v_sup - v_s`, copied from the portrait when one is attached.
    pub h_s: Option<f64>,
}

impl OrbitData {
    /// Orbit from externally known roots (for potentials without a saddle,
    /// e.g. a globally convex well).
    pub fn from_roots(v1: Option<f64>, v2: f64, v3: f64, h_s: Option<f64>) -> Self {
        OrbitData {
            v1,
            v2,
            v3,
            rho: v1.map(|v1| (v2 - v1) / (v3 - v2)),
            delta: 0.5 * (v3 - v2),
            m: 0.5 * (v2 + v3),
            h_s,
        }
    }
}

/// Bisection with Newton polish on an interval with a sign change.
/// `tol` is absolute on the residual of `f`.
fn bisect_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootBracketFailure { lo, hi });
    }
    // Contract the bracket first so Newton starts close.
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON {
        let fx = f(x);
        if fx.abs() <= tol {
            return Ok(x);
        }
        let d = df(x);
        let step = if d != 0.0 { fx / d } else { f64::INFINITY };
        let next = x - step;
        if next.is_finite() && next > lo && next < hi {
            x = next;
        } else {
            // Fall back to one bisection step.
            let mid = 0.5 * (lo + hi);
            if f(mid).signum() == f(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            x = 0.5 * (lo + hi);
        }
    }
    Ok(x)
}

/// Locates and validates the saddle/center/conjugate skeleton, or reports
/// which part of the expected variation pattern failed.
pub fn classify_portrait(sys: &SystemSpec, c: f64, lambda: &[f64]) -> Result<PhasePortrait> {
    let [lo, hi] = sys.domain;
    let wv = |v: f64| sys.eval_potential_unchecked(v, c, lambda, 1).unwrap()[1];
    let wvv = |v: f64| sys.eval_potential_unchecked(v, c, lambda, 2).unwrap()[2];
    let w0 = |v: f64| sys.eval_potential_unchecked(v, c, lambda, 0).unwrap()[0];

    // Critical points by sign-change bracketing of W_v on a uniform grid.
    let mut crits: Vec<f64> = Vec::new();
    let h = (hi - lo) / BRACKET_SAMPLES as f64;
    let mut prev = wv(lo);
    for i in 1..=BRACKET_SAMPLES {
        let x = lo + i as f64 * h;
        let cur = wv(x);
        if prev == 0.0 {
            crits.push(x - h);
        } else if prev.signum() != cur.signum() {
            let tol = 1e-13 * wv_scale(sys, c, lambda);
            crits.push(bisect_newton(wv, wvv, x - h, x, tol)?);
        }
        prev = cur;
    }

    let saddles: Vec<f64> = crits.iter().copied().filter(|&v| wvv(v) < 0.0).collect();
    let centers: Vec<f64> = crits.iter().copied().filter(|&v| wvv(v) > 0.0).collect();
    if saddles.is_empty() {
        return Err(Error::NoSaddle);
    }
    if centers.is_empty() {
        return Err(Error::NoCenter);
    }

    // First adjacent (saddle, center) pair in increasing order.
    let mut pair = None;
    for &vs in &saddles {
        if let Some(&v0) = centers.iter().find(|&&v0| v0 > vs) {
            let interleaved = crits.iter().any(|&x| x > vs && x < v0);
            if interleaved {
                continue;
            }
            pair = Some((vs, v0));
            break;
        }
    }
    let (v_s, v_0) = pair.ok_or_else(|| {
        Error::PatternViolation("no adjacent saddle-center pair with v_s < v_0".into())
    })?;

    let mu_s = w0(v_s);
    let mu_0 = w0(v_0);
    if mu_0.is_nan() || mu_s.is_nan() || mu_0 >= mu_s {
        return Err(Error::PatternViolation(format!(
            "mu_0 = {mu_0} not below mu_s = {mu_s}"
        )));
    }

    // Conjugate point: first level crossing W = mu_s right of v_0. If a
    // critical point shows up before the level is re-attained, the
    // Table-1 monotone pattern is broken.
    let next_crit = crits.iter().copied().find(|&x| x > v_0).unwrap_or(hi);
    let mut v_sup = None;
    let steps = BRACKET_SAMPLES;
    let hh = (hi - v_0) / steps as f64;
    let mut prev = w0(v_0) - mu_s;
    for i in 1..=steps {
        let x = v_0 + i as f64 * hh;
        let cur = w0(x) - mu_s;
        if prev.signum() != cur.signum() || cur == 0.0 {
            let tol = 1e-13 * mu_s.abs().max(1.0);
            let root = bisect_newton(|v| w0(v) - mu_s, wv, x - hh, x, tol)?;
            if root > next_crit + 1e-12 * (hi - lo) {
                return Err(Error::PatternViolation(format!(
                    "critical point at {next_crit} interleaves before the conjugate point"
                )));
            }
            v_sup = Some(root);
            break;
        }
        prev = cur;
    }
    let v_sup = v_sup.ok_or(Error::NoConjugate)?;

    // Sampled Table-1 sign pattern: W_v < 0 on (v_s, v_0), > 0 on (v_0, v_sup].
    for i in 1..PATTERN_SAMPLES {
        let t = i as f64 / PATTERN_SAMPLES as f64;
        let x = v_s + t * (v_0 - v_s);
        if wv(x) >= 0.0 {
            return Err(Error::PatternViolation(format!("W_v({x}) >= 0 in (v_s, v_0)")));
        }
        let y = v_0 + t * (v_sup - v_0);
        if wv(y) <= 0.0 {
            return Err(Error::PatternViolation(format!("W_v({y}) <= 0 in (v_0, v_sup]")));
        }
    }

    Ok(PhasePortrait {
        v_s,
        v_0,
        v_sup,
        mu_0,
        mu_s,
        c,
        lambda: lambda.to_vec(),
    })
}

fn wv_scale(sys: &SystemSpec, c: f64, lambda: &[f64]) -> f64 {
    let [lo, hi] = sys.domain;
    let mut m = 1.0f64;
    for i in 0..=8 {
        let v = lo + (hi - lo) * i as f64 / 8.0;
        if let Ok(w) = sys.eval_potential_unchecked(v, c, lambda, 1) {
            m = m.max(w[1].abs());
        }
    }
    m
}

/// Solves for the orbit roots `v_1 < v_s < v_2 < v_0 < v_3 < v_sup` of
/// `mu - W` at the level `mu` carried by `params`. `v_1` is marked absent
/// (not an error) when `W` has no crossing left of the saddle inside the
/// domain.
pub fn orbit_roots(sys: &SystemSpec, params: &Params, portrait: &PhasePortrait) -> Result<OrbitData> {
    let mu = params.mu;
    if !(portrait.mu_0 < mu && mu < portrait.mu_s) {
        return Err(Error::MuOutOfRange {
            mu,
            mu_0: portrait.mu_0,
            mu_s: portrait.mu_s,
        });
    }
    let c = params.c;
    let lambda = &params.lambda;
    let z = |v: f64| mu - sys.eval_potential_unchecked(v, c, lambda, 0).unwrap()[0];
    let zv = |v: f64| -sys.eval_potential_unchecked(v, c, lambda, 1).unwrap()[1];
    let tol = 1e-13 * portrait.mu_s.abs().max(1.0);

    // Z(v_s) = mu - mu_s < 0 < mu - mu_0 = Z(v_0): brackets are guaranteed.
    let v2 = bisect_newton(z, zv, portrait.v_s, portrait.v_0, tol)?;
    let v3 = bisect_newton(z, zv, portrait.v_0, portrait.v_sup, tol)?;

    // Scan left of the saddle for the outer root.
    let lo = sys.domain[0];
    let mut v1 = None;
    if lo < portrait.v_s {
        let steps = 512;
        let h = (portrait.v_s - lo) / steps as f64;
        let mut right = portrait.v_s;
        let mut fr = z(right);
        for i in 1..=steps {
            let left = portrait.v_s - i as f64 * h;
            let fl = z(left);
            if fl.signum() != fr.signum() || fl == 0.0 {
                v1 = Some(bisect_newton(z, zv, left, right, tol)?);
                break;
            }
            right = left;
            fr = fl;
        }
    }

    Ok(OrbitData {
        v1,
        v2,
        v3,
        rho: v1.map(|v1| (v2 - v1) / (v3 - v2)),
        delta: 0.5 * (v3 - v2),
        m: 0.5 * (v2 + v3),
        h_s: Some(portrait.h_s()),
    })
}
