//! Action Hessian, negative signature, and the stability verdict.
//!
//! The Hessian is central-differenced from the action gradient, which is
//! smooth in the parameters and cheap, rather than by differentiating
//! under the integral sign (the endpoint derivatives of the integrand are
//! not integrable). The verdict compares the negative signature `n` of the
//! Hessian with the system dimension `N`: `n - N = 0` gives conditional
//! orbital stability with respect to co-periodic perturbations, odd
//! `n - N` gives spectral instability, and everything else is left
//! undecided.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::model::{Params, SystemSpec};
use crate::portrait::{classify_portrait, orbit_roots};
use crate::quadrature::{theta_and_grad, theta_and_grad_soliton_regime};
use crate::{Error, Result};

/// Relative asymmetry allowed in the differenced Hessian.
const ASYM_TOL: f64 = 1e-4;
/// Retries (halving every step) when the asymmetry check fails.
const ASYM_RETRIES: usize = 5;
/// Switch to the soliton-regime gradient evaluator below this `rho`.
const RHO_SWITCH: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    CoPeriodicOrbitallyStable,
    SpectrallyUnstable,
    Inconclusive,
    Degenerate,
}

/// Negative signature of a symmetric matrix with a degeneracy flag and,
/// when all leading principal minors are cleanly nonzero, the Sylvester
/// sign-change count as a cross-check.
#[derive(Debug, Clone, Serialize)]
pub struct Signature {
    pub n: usize,
    pub degenerate: bool,
    pub sylvester_n: Option<usize>,
}

/// `n = #{eigenvalues < -tol_eig}`; degenerate when any eigenvalue sits
/// within `tol_eig` of zero.
pub fn negative_signature(h: &DMatrix<f64>, tol_eig: f64) -> Signature {
    let eig = h.clone().symmetric_eigen().eigenvalues;
    let n = eig.iter().filter(|&&e| e < -tol_eig).count();
    let degenerate = eig.iter().any(|&e| e.abs() <= tol_eig);

    // Sylvester cross-check on leading principal minors, attempted only
    // when every minor clears the tolerance at its own scale.
    let dim = h.nrows();
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(1e-300);
    let mut minors = Vec::with_capacity(dim);
    let mut clean = true;
    for k in 1..=dim {
        let mk = h.view((0, 0), (k, k)).clone_owned().lu().determinant();
        if mk.abs() <= tol_eig * scale.powi(k as i32 - 1) {
            clean = false;
            break;
        }
        minors.push(mk);
    }
    let sylvester_n = clean.then(|| {
        let mut count = 0;
        let mut prev = 1.0f64;
        for &mk in &minors {
            if mk.signum() != prev.signum() {
                count += 1;
            }
            prev = mk;
        }
        count
    });

    Signature {
        n,
        degenerate,
        sylvester_n,
    }
}

/// The differenced Hessian together with the steps that produced it.
#[derive(Debug, Clone)]
pub struct HessianData {
    pub h: DMatrix<f64>,
    pub steps: Vec<f64>,
    /// Relative asymmetry `max|A - A^T| / (2 max|H|)` before symmetrizing.
    pub asymmetry: f64,
}

/// Evaluates the action gradient at arbitrary nearby parameters,
/// re-classifying the portrait each time. The evaluator (theta- or
/// sigma-based) is fixed from the base orbit so every finite-difference
/// sample goes through the same code path.
fn grad_at(sys: &SystemSpec, p: &Params, soliton_mode: bool) -> Result<DVector<f64>> {
    let portrait = classify_portrait(sys, p.c, &p.lambda)?;
    let orbit = orbit_roots(sys, p, &portrait)?;
    let ag = if soliton_mode {
        theta_and_grad_soliton_regime(sys, p, &orbit)?
    } else {
        theta_and_grad(sys, p, &orbit)?
    };
    Ok(ag.grad_vector())
}

fn theta_at(sys: &SystemSpec, p: &Params, soliton_mode: bool) -> Result<f64> {
    let portrait = classify_portrait(sys, p.c, &p.lambda)?;
    let orbit = orbit_roots(sys, p, &portrait)?;
    let ag = if soliton_mode {
        theta_and_grad_soliton_regime(sys, p, &orbit)?
    } else {
        theta_and_grad(sys, p, &orbit)?
    };
    Ok(ag.theta)
}

/// Window margin of `mu` inside `(mu_0, mu_s)` at the parameters of `p`.
fn window_margin(sys: &SystemSpec, p: &Params) -> Result<f64> {
    let portrait = classify_portrait(sys, p.c, &p.lambda)?;
    Ok((p.mu - portrait.mu_0).min(portrait.mu_s - p.mu))
}

/// Central differences of `grad Theta` in each of the N+2 parameters,
/// symmetrized. Steps start at `max(1e-5, 1e-4 |p_i|)`, are capped by the
/// distance of `mu` to the `(mu_0, mu_s)` window edges, and shrink when a
/// perturbed point loses its orbit or more than half its window margin.
pub fn hessian_action(sys: &SystemSpec, params: &Params) -> Result<HessianData> {
    let dim = sys.dim();
    let base = params.to_vector();
    let portrait = classify_portrait(sys, params.c, &params.lambda)?;
    let orbit = orbit_roots(sys, params, &portrait)?;
    let soliton_mode = matches!(orbit.rho, Some(r) if r < RHO_SWITCH);
    let margin = (params.mu - portrait.mu_0).min(portrait.mu_s - params.mu);

    let mut steps: Vec<f64> = (0..dim)
        .map(|i| {
            let h = 1e-5f64.max(1e-4 * base[i].abs());
            if i == 0 {
                h.min(0.1 * margin)
            } else {
                h
            }
        })
        .collect();

    for attempt in 0..=ASYM_RETRIES {
        // Shrink each step until both perturbed points keep a valid orbit
        // and at least half of the base window margin.
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
        for (i, step) in steps.iter_mut().enumerate() {
            let mut ok = None;
            for _ in 0..60 {
                let mut pp = base.clone();
                let mut pm = base.clone();
                pp[i] += *step;
                pm[i] -= *step;
                let (pp, pm) = (Params::from_vector(&pp), Params::from_vector(&pm));
                let valid =
                    |p: &Params| -> bool { window_margin(sys, p).is_ok_and(|m| m >= 0.5 * margin) };
                if valid(&pp) && valid(&pm) {
                    if let (Ok(gp), Ok(gm)) = (
                        grad_at(sys, &pp, soliton_mode),
                        grad_at(sys, &pm, soliton_mode),
                    ) {
                        ok = Some((gp - gm) / (2.0 * *step));
                        break;
                    }
                }
                *step *= 0.5;
            }
            match ok {
                Some(col) => cols.push(col),
                None => return Err(Error::PerturbationLeavesWindow),
            }
        }

        let mut a = DMatrix::zeros(dim, dim);
        for (i, col) in cols.iter().enumerate() {
            a.set_column(i, col);
        }
        let h = (&a + a.transpose()) * 0.5;
        let scale = h.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
        let asymmetry = (&a - a.transpose())
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
            / (2.0 * scale);
        if asymmetry < ASYM_TOL || attempt == ASYM_RETRIES {
            if asymmetry >= ASYM_TOL {
                return Err(Error::AssumptionViolation(format!(
                    "Hessian asymmetry {asymmetry:.3e} persists after {ASYM_RETRIES} step halvings"
                )));
            }
            return Ok(HessianData {
                h,
                steps,
                asymmetry,
            });
        }
        for step in &mut steps {
            *step *= 0.5;
        }
    }
    unreachable!("loop returns on last attempt")
}

/// Directional quadratic form `dir . grad^2 Theta . dir`, by central
/// differences of `grad Theta . dir` along `dir` itself.
///
/// Near the soliton limit this is far better conditioned than contracting
/// the full differenced Hessian: along `S = S-matrix V_s` the singular
/// `1/rho^2` and `ln rho` blocks are annihilated analytically, so the
/// difference quotient never sees them, and along `E` the step can be
/// taken much smaller than the full-matrix step rules allow. `h_frac` is
/// the fraction of the `(mu_0, mu_s)` window the step may consume.
pub fn quadratic_form(
    sys: &SystemSpec,
    params: &Params,
    dir: &DVector<f64>,
    h_frac: f64,
) -> Result<f64> {
    let base = params.to_vector();
    let portrait = classify_portrait(sys, params.c, &params.lambda)?;
    let orbit = orbit_roots(sys, params, &portrait)?;
    let soliton_mode = matches!(orbit.rho, Some(r) if r < RHO_SWITCH);
    let margin = (params.mu - portrait.mu_0).min(portrait.mu_s - params.mu);
    let mut h = h_frac * margin / dir[0].abs().max(1e-3);
    for _ in 0..60 {
        let pp = Params::from_vector(&(&base + dir * h));
        let pm = Params::from_vector(&(&base - dir * h));
        let valid = |p: &Params| window_margin(sys, p).is_ok_and(|m| m >= 0.5 * margin);
        if valid(&pp) && valid(&pm) {
            if let (Ok(gp), Ok(gm)) = (
                grad_at(sys, &pp, soliton_mode),
                grad_at(sys, &pm, soliton_mode),
            ) {
                return Ok((gp.dot(dir) - gm.dot(dir)) / (2.0 * h));
            }
        }
        h *= 0.5;
    }
    Err(Error::PerturbationLeavesWindow)
}

/// Brute-force second difference of `Theta` itself; a slow oracle used by
/// the tests to validate [`hessian_action`].
pub fn hessian_brute_force(sys: &SystemSpec, params: &Params, step: f64) -> Result<DMatrix<f64>> {
    let dim = sys.dim();
    let base = params.to_vector();
    let portrait = classify_portrait(sys, params.c, &params.lambda)?;
    let orbit = orbit_roots(sys, params, &portrait)?;
    let soliton_mode = matches!(orbit.rho, Some(r) if r < RHO_SWITCH);
    let th = |dv: &DVector<f64>| -> Result<f64> {
        theta_at(sys, &Params::from_vector(&(&base + dv)), soliton_mode)
    };
    let t0 = th(&DVector::zeros(dim))?;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..=i {
            let mut e = DVector::zeros(dim);
            let val = if i == j {
                e[i] = step;
                let tp = th(&e)?;
                e[i] = -step;
                let tm = th(&e)?;
                (tp - 2.0 * t0 + tm) / (step * step)
            } else {
                e[i] = step;
                e[j] = step;
                let tpp = th(&e)?;
                e[j] = -step;
                let tpm = th(&e)?;
                e[i] = -step;
                e[j] = step;
                let tmp = th(&e)?;
                e[j] = -step;
                let tmm = th(&e)?;
                (tpp - tpm - tmp + tmm) / (4.0 * step * step)
            };
            h[(i, j)] = val;
            h[(j, i)] = val;
        }
    }
    Ok(h)
}

/// Full stability report for one wave.
#[derive(Debug, Clone, Serialize)]
pub struct HessianReport {
    #[serde(skip)]
    pub h: DMatrix<f64>,
    /// `d^2 Theta / d mu^2 = H[0][0] = d Xi / d mu`.
    pub d2mu: f64,
    pub det: f64,
    pub signature: usize,
    pub eigenvalues: Vec<f64>,
    pub steps: Vec<f64>,
    pub asymmetry: f64,
    pub degenerate: bool,
    pub verdict: Verdict,
    pub theta: f64,
    pub period: f64,
}

/// Maps the signature defect to a verdict: `n - N = 0` is co-periodically
/// orbitally stable, odd `n - N` is spectrally unstable, any other nonzero
/// even defect is left undecided. Degeneracy (of `d^2 Theta/dmu^2` or of
/// the Hessian itself) voids both conclusions.
pub fn signature_verdict(signature: usize, system_n: u8, degenerate: bool) -> Verdict {
    let defect = signature as i64 - system_n as i64;
    if degenerate {
        Verdict::Degenerate
    } else if defect == 0 {
        Verdict::CoPeriodicOrbitallyStable
    } else if defect.rem_euclid(2) == 1 {
        Verdict::SpectrallyUnstable
    } else {
        Verdict::Inconclusive
    }
}

/// Full stability verdict from the signature of the differenced Hessian.
pub fn stability_verdict(sys: &SystemSpec, params: &Params) -> Result<HessianReport> {
    let portrait = classify_portrait(sys, params.c, &params.lambda)?;
    let orbit = orbit_roots(sys, params, &portrait)?;
    let soliton_mode = matches!(orbit.rho, Some(r) if r < RHO_SWITCH);
    let ag = if soliton_mode {
        theta_and_grad_soliton_regime(sys, params, &orbit)?
    } else {
        theta_and_grad(sys, params, &orbit)?
    };
    let data = hessian_action(sys, params)?;
    let spec_norm = data
        .h
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()));
    let tol_eig = 1e-7 * spec_norm.max(1e-300);
    let sig = negative_signature(&data.h, tol_eig);
    let d2mu = data.h[(0, 0)];
    let det = data.h.clone().lu().determinant();
    let mut eigenvalues: Vec<f64> = data
        .h
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let verdict = signature_verdict(sig.n, sys.n, d2mu.abs() <= tol_eig || sig.degenerate);

    Ok(HessianReport {
        h: data.h,
        d2mu,
        det,
        signature: sig.n,
        eigenvalues,
        steps: data.steps,
        asymmetry: data.asymmetry,
        degenerate: sig.degenerate,
        verdict,
        theta: ag.theta,
        period: ag.period(),
    })
}
