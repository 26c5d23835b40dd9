//! Spectra of constant steady states.
//!
//! For a constant state the linearized operator diagonalizes by Fourier
//! transform: in the scalar case the symbol is purely imaginary for every
//! wavenumber, while for N = 2 the eigenvalues come in a real or complex
//! pair depending on the sign of `f'' + kappa xi^2 + tau'' u*^2 / 2`, which
//! at `xi = 0` is the hyperbolicity condition of the dispersionless
//! system. Stability with respect to co-periodic zero-mean perturbations
//! instead compares the period against the harmonic threshold
//! `Xi* = 2 pi sqrt(kappa / W_vv)` of a center-type state.

use num_complex::Complex64;
use serde::Serialize;

use crate::model::SystemSpec;
use crate::{Error, Result};

/// Eigenvalues of the Fourier symbol at one wavenumber.
#[derive(Debug, Clone, Serialize)]
pub struct DispersionReport {
    pub xi: f64,
    pub eigenvalues: Vec<(f64, f64)>,
    /// All eigenvalues purely imaginary (neutral spectral stability at
    /// this wavenumber).
    pub purely_imaginary: bool,
}

/// Symbol eigenvalues at wavenumber `xi` for the constant state
/// `(v*, u*)`: `z = i xi (f''(v*) + c/b + kappa(v*) xi^2)` for N = 1, and
/// `z = i xi b sigma` with `sigma` the eigenvalues of the 2x2 symbol
/// matrix for N = 2.
pub fn dispersion_relation(
    sys: &SystemSpec,
    ustar: (f64, Option<f64>),
    c: f64,
    xi: f64,
) -> Result<DispersionReport> {
    let (v, u) = ustar;
    sys.check_domain(v)?;
    let f2 = {
        let mut d = [0.0; 3];
        sys.f.eval_derivs(v, &mut d);
        d[2]
    };
    let kappa = sys.kappa.eval(v);
    let eigenvalues: Vec<Complex64> = match sys.n {
        1 => vec![Complex64::new(0.0, xi * (f2 + c / sys.b + kappa * xi * xi))],
        _ => {
            let u = u.ok_or_else(|| {
                Error::InvalidSystem("u* required for an N = 2 constant state".into())
            })?;
            let tau = sys.tau.as_ref().expect("N = 2 has tau");
            let t0 = tau.eval(v);
            let t1 = tau.derivative().eval(v);
            let t2 = tau.derivative().derivative().eval(v);
            let diag = c / sys.b + t1 * u;
            let disc = t0 * (f2 + kappa * xi * xi + 0.5 * t2 * u * u);
            if disc >= 0.0 {
                let r = disc.sqrt();
                vec![
                    Complex64::new(0.0, xi * sys.b * (diag + r)),
                    Complex64::new(0.0, xi * sys.b * (diag - r)),
                ]
            } else {
                let r = (-disc).sqrt();
                // sigma = diag +/- i r: z = i xi b sigma has real part -/+ xi b r.
                vec![
                    Complex64::new(-xi * sys.b * r, xi * sys.b * diag),
                    Complex64::new(xi * sys.b * r, xi * sys.b * diag),
                ]
            }
        }
    };
    let purely_imaginary = eigenvalues.iter().all(|z| z.re == 0.0);
    Ok(DispersionReport {
        xi,
        eigenvalues: eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
        purely_imaginary,
    })
}

/// Summary of a constant state: hyperbolicity of the dispersionless
/// system, localized spectral stability, and the co-periodic threshold.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantStateReport {
    pub hyperbolic: bool,
    pub spectrally_stable_localized: bool,
    pub xi_star: Option<f64>,
    pub kernel_dim_at_xi_star: usize,
}

pub fn constant_state_report(
    sys: &SystemSpec,
    ustar: (f64, Option<f64>),
    c: f64,
    lambda: &[f64],
) -> Result<ConstantStateReport> {
    let (v, u) = ustar;
    sys.check_domain(v)?;
    let hyperbolic = match sys.n {
        1 => true,
        _ => {
            let u = u.ok_or_else(|| {
                Error::InvalidSystem("u* required for an N = 2 constant state".into())
            })?;
            let mut d = [0.0; 3];
            sys.f.eval_derivs(v, &mut d);
            let t2 = sys
                .tau
                .as_ref()
                .expect("N = 2 has tau")
                .derivative()
                .derivative()
                .eval(v);
            d[2] + 0.5 * t2 * u * u >= 0.0
        }
    };
    let xi_star = coperiodic_threshold(sys, v, c, lambda).ok().map(|t| t.xi_star);
    Ok(ConstantStateReport {
        hyperbolic,
        spectrally_stable_localized: hyperbolic,
        xi_star,
        kernel_dim_at_xi_star: if xi_star.is_some() { 2 } else { 0 },
    })
}

/// The co-periodic variational threshold at a center-type state.
#[derive(Debug, Clone, Serialize)]
pub struct CoperiodicThreshold {
    pub xi_star: f64,
}

impl CoperiodicThreshold {
    /// Variational stability under zero-mean co-periodic perturbations.
    pub fn stable(&self, xi_period: f64) -> bool {
        xi_period <= self.xi_star
    }

    /// Kernel of the constrained second variation: two-dimensional
    /// exactly at the threshold (the two first harmonics), trivial below.
    pub fn kernel_dim(&self, xi_period: f64) -> usize {
        if (xi_period - self.xi_star).abs() <= 1e-12 * self.xi_star {
            2
        } else {
            0
        }
    }
}

/// `Xi* = 2 pi sqrt(kappa(v*) / W_vv(v*))`, the harmonic period; absent
/// (an error) at saddle-type states.
pub fn coperiodic_threshold(
    sys: &SystemSpec,
    v_star: f64,
    c: f64,
    lambda: &[f64],
) -> Result<CoperiodicThreshold> {
    let w = sys.eval_potential(v_star, c, lambda, 2)?;
    if w[2] <= 0.0 {
        return Err(Error::AssumptionViolation(format!(
            "W_vv({v_star}) = {} not positive: no co-periodic threshold",
            w[2]
        )));
    }
    Ok(CoperiodicThreshold {
        xi_star: 2.0 * std::f64::consts::PI * (sys.kappa.eval(v_star) / w[2]).sqrt(),
    })
}

/// Smallest eigenvalue of the constrained second-variation symbol at
/// wavenumber `xi`: the scalar `-W_vv + kappa xi^2` for N = 1, the 2x2
/// matrix `[[f'' + kappa xi^2 + tau'' u*^2/2, c/b + tau' u*],
/// [c/b + tau' u*, tau]]` for N = 2.
pub fn sigma_star_min_eig(
    sys: &SystemSpec,
    ustar: (f64, Option<f64>),
    c: f64,
    lambda: &[f64],
    xi: f64,
) -> Result<f64> {
    let (v, u) = ustar;
    let w = sys.eval_potential(v, c, lambda, 2)?;
    let kappa = sys.kappa.eval(v);
    match sys.n {
        1 => Ok(-w[2] + kappa * xi * xi),
        _ => {
            let u = u.ok_or_else(|| {
                Error::InvalidSystem("u* required for an N = 2 constant state".into())
            })?;
            let mut d = [0.0; 3];
            sys.f.eval_derivs(v, &mut d);
            let tau = sys.tau.as_ref().expect("N = 2 has tau");
            let t0 = tau.eval(v);
            let t1 = tau.derivative().eval(v);
            let t2 = tau.derivative().derivative().eval(v);
            let a11 = d[2] + kappa * xi * xi + 0.5 * t2 * u * u;
            let off = c / sys.b + t1 * u;
            // smaller root of the 2x2 symmetric eigenproblem
            let tr = a11 + t0;
            let det = a11 * t0 - off * off;
            Ok(0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()))
        }
    }
}

/// The quadratic form `U . Sigma*(xi) U` for N = 2, exposed for the
/// identity check `U . Sigma* U = (-W_vv + kappa xi^2) v^2
/// + (tau u + (c/b + tau' u*) v)^2 / tau`.
pub fn sigma_star_form(
    sys: &SystemSpec,
    ustar: (f64, Option<f64>),
    c: f64,
    lambda: &[f64],
    xi: f64,
    direction: (f64, f64),
) -> Result<f64> {
    if sys.n != 2 {
        return Err(Error::Usage {
            required: 2,
            actual: sys.n,
        });
    }
    let (vs, us) = ustar;
    let u_star = us.ok_or_else(|| {
        Error::InvalidSystem("u* required for an N = 2 constant state".into())
    })?;
    let _ = lambda;
    let mut d = [0.0; 3];
    sys.f.eval_derivs(vs, &mut d);
    let tau = sys.tau.as_ref().expect("N = 2 has tau");
    let t0 = tau.eval(vs);
    let t1 = tau.derivative().eval(vs);
    let t2 = tau.derivative().derivative().eval(vs);
    let kappa = sys.kappa.eval(vs);
    let a11 = d[2] + kappa * xi * xi + 0.5 * t2 * u_star * u_star;
    let off = c / sys.b + t1 * u_star;
    let (v, u) = direction;
    Ok(a11 * v * v + 2.0 * off * v * u + t0 * u * u)
}
