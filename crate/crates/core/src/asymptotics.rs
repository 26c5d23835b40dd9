//! Limit coefficients, frame vectors, and predicted Hessian expansions.
//!
//! In the harmonic limit the action Hessian converges to an explicit
//! rank-structured matrix built from the frame vectors `V, W, Z, T` at the
//! center; in the soliton limit it splits into a `1/rho^2` rank-one block,
//! a `ln rho` block of the same shape as the harmonic leading term (with
//! the opposite sign on `T (x) T`), and a bounded matrix known only
//! through the scalar `S . D S = M''`. Everything here evaluates those
//! predictions from exact potential derivatives and compares them against
//! the differenced Hessian.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::algebra::{basis_p, build_s, e_vector};
use crate::model::{Params, SystemSpec};
use crate::portrait::{classify_portrait, orbit_roots, PhasePortrait};
use crate::quadrature::{momentum_derivatives, MomentumMethod};
use crate::stability::{hessian_action, quadratic_form};
use crate::{Error, Result};

/// Which distinguished limit a frame or coefficient set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Limit {
    Harmonic,
    Soliton,
}

/// Expansion coefficients at a limit point: the amplitude scale `a`, the
/// drift `b`, the third-order coefficient `cc`, and (soliton only) the
/// conjugate-point slope `p = 1/W_v(v_sup)`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitCoeffs {
    pub a: f64,
    pub b: f64,
    pub cc: f64,
    pub p: Option<f64>,
    pub which: Limit,
}

/// Coefficients from exact potential derivatives at `v_0` or `v_s`.
pub fn limit_coeffs(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    portrait: &PhasePortrait,
    which: Limit,
) -> Result<LimitCoeffs> {
    let point = match which {
        Limit::Harmonic => portrait.v_0,
        Limit::Soliton => portrait.v_s,
    };
    let w = sys.eval_potential(point, c, lambda, 4)?;
    let (w2, w3, w4) = (w[2], w[3], w[4]);
    let coeffs = match which {
        Limit::Harmonic => {
            if w2 <= 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "W_vv({point}) = {w2} not positive at the center"
                )));
            }
            LimitCoeffs {
                a: (2.0 / w2).sqrt(),
                b: -w3 / (3.0 * w2 * w2),
                cc: (5.0 / 3.0 * w3 * w3 - w2 * w4) / (6.0 * 2.0f64.sqrt() * w2.powf(3.5)),
                p: None,
                which,
            }
        }
        Limit::Soliton => {
            if w2 >= 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "W_vv({point}) = {w2} not negative at the saddle"
                )));
            }
            let wv_sup = sys.potential_deriv(portrait.v_sup, c, lambda, 1)?;
            LimitCoeffs {
                a: (-2.0 / w2).sqrt(),
                b: w3 / (3.0 * w2 * w2),
                cc: (5.0 / 3.0 * w3 * w3 - w2 * w4) / (6.0 * 2.0f64.sqrt() * (-w2).powf(3.5)),
                p: Some(1.0 / wv_sup),
                which,
            }
        }
    };
    Ok(coeffs)
}

/// Predicted Hessian data attached to a frame.
#[derive(Debug, Clone)]
pub enum Predicted {
    Harmonic {
        /// `pi Y^0 (alpha V(x)V + beta (V(x)W + W(x)V) + a^2/2 W(x)W
        ///  - T(x)T + a^2/4 (V(x)Z + Z(x)V))`.
        h: DMatrix<f64>,
    },
    Soliton {
        rho: f64,
        /// The `(1+rho)/rho^2` rank-one block, including all scalars.
        lead: DMatrix<f64>,
        /// Coefficient matrix of `ln rho`, including `Y^s_0`.
        log_block: DMatrix<f64>,
        /// `M''` from the momentum integrals, when requested.
        m2: Option<f64>,
    },
}

/// Frame vectors and limit data at `v_0` or `v_s`.
#[derive(Debug, Clone)]
pub struct AsymFrame {
    pub which: Limit,
    /// `V = grad Z`, `W = grad Z_v`, `Z = grad Z_vv`, and the rank-one
    /// factor `T` at the limit point.
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    pub z: DVector<f64>,
    pub t: DVector<f64>,
    /// `V` evaluated at the conjugate point (soliton only).
    pub vsup: Option<DVector<f64>>,
    /// `S = S-matrix * V_s` (soliton only).
    pub s: Option<DVector<f64>>,
    pub coeffs: LimitCoeffs,
    /// `alpha` from the Y-derivative definition.
    pub alpha: f64,
    /// `alpha` from the closed formula in `kappa`-derivatives.
    pub alpha_closed: f64,
    pub beta: f64,
    /// Harmonic period `Xi_0 = pi a sqrt(2 kappa)` (harmonic only).
    pub xi0: Option<f64>,
    /// `Y` at coincident nodes: `sqrt(2 kappa / |R|)` with `|R| = |W_vv|/2`.
    pub ypoint: f64,
    /// `v_sup - v_s` (soliton only).
    pub h_s: Option<f64>,
    pub predicted: Option<Predicted>,
}

/// The two alpha routes and beta, from the closed-form derivatives of `Y`
/// at coincident nodes: `Y_z/Y = b/a^2`, `Y_v/Y = b/a^2 + kappa'/2kappa`,
/// `Y_vv/Y` and `Y_zz - Y_wz` from `R_v = W_3/6`, `R_vv = W_4/12`,
/// `R_wz = W_4/24`.
fn alpha_beta(sys: &SystemSpec, point: f64, coeffs: &LimitCoeffs) -> (f64, f64, f64) {
    let (a, b, cc) = (coeffs.a, coeffs.b, coeffs.cc);
    let a2 = a * a;
    let kappa = sys.kappa.eval(point);
    let k1 = sys.kappa.derivative().eval(point);
    let k2 = sys.kappa.derivative().derivative().eval(point);
    let kl = k1 / kappa; // (log kappa)'
    let kl_v = k2 / kappa - kl * kl;

    let yv = b / a2 + 0.5 * kl;
    let yz = b / a2;
    let yvv = -2.0 * b * b / (a2 * a2) + 2.0 * cc / (a2 * a) + (b / a2) * kl + 0.25 * kl * kl
        + 0.5 * kl_v;
    let yzz_minus_ywz = -2.5 * b * b / (a2 * a2) + cc / (a2 * a);

    let alpha = b * (yv + 2.0 * yz) + a2 * (0.25 * yvv + yzz_minus_ywz);
    let alpha_closed =
        1.5 * cc / a + 0.75 * b * kl + a2 / 16.0 * kl * kl + a2 / 8.0 * kl_v;
    let beta = b + 0.5 * a2 * yv;
    (alpha, alpha_closed, beta)
}

fn symmetric_outer(x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    x * y.transpose() + y * x.transpose()
}

/// Frame vectors (and scalars) at the requested limit point, without the
/// predicted Hessian blocks.
pub fn frame_vectors(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    portrait: &PhasePortrait,
    which: Limit,
) -> Result<AsymFrame> {
    let coeffs = limit_coeffs(sys, c, lambda, portrait, which)?;
    let point = match which {
        Limit::Harmonic => portrait.v_0,
        Limit::Soliton => portrait.v_s,
    };
    let gz = sys.grad_z(point, c, lambda)?;
    let t = sys.t_vector(point)?;
    let (vsup, s) = match which {
        Limit::Soliton => {
            let vs = sys.grad_z(portrait.v_sup, c, lambda)?.v;
            let s = build_s(sys).apply(&gz.v);
            (Some(vs), Some(s))
        }
        Limit::Harmonic => (None, None),
    };
    let (alpha, alpha_closed, beta) = alpha_beta(sys, point, &coeffs);
    let kappa = sys.kappa.eval(point);
    // |R| = |W_vv|/2 = 1/a^2 at coincident nodes in both limits.
    let ypoint = coeffs.a * (2.0 * kappa).sqrt();
    let xi0 = match which {
        Limit::Harmonic => Some(std::f64::consts::PI * coeffs.a * (2.0 * kappa).sqrt()),
        Limit::Soliton => None,
    };
    let h_s = matches!(which, Limit::Soliton).then(|| portrait.h_s());
    Ok(AsymFrame {
        which,
        v: gz.v,
        w: gz.w,
        z: gz.z,
        t,
        vsup,
        s,
        coeffs,
        alpha,
        alpha_closed,
        beta,
        xi0,
        ypoint,
        h_s,
        predicted: None,
    })
}

/// The structural part of both limit expansions:
/// `alpha V(x)V + beta (V(x)W + W(x)V) + a^2/2 W(x)W + tsign T(x)T
///  + a^2/4 (V(x)Z + Z(x)V)`.
fn structured_block(frame: &AsymFrame, tsign: f64) -> DMatrix<f64> {
    let a2 = frame.coeffs.a * frame.coeffs.a;
    let vv = &frame.v * frame.v.transpose();
    let ww = &frame.w * frame.w.transpose();
    let tt = &frame.t * frame.t.transpose();
    frame.alpha * vv
        + frame.beta * symmetric_outer(&frame.v, &frame.w)
        + 0.5 * a2 * ww
        + tsign * tt
        + 0.25 * a2 * symmetric_outer(&frame.v, &frame.z)
}

/// Harmonic frame with the predicted Hessian
/// `pi Y^0 [alpha V(x)V + beta (VW + WV) + a^2/2 WW - TT + a^2/4 (VZ + ZV)]`.
pub fn harmonic_hessian_prediction(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    portrait: &PhasePortrait,
) -> Result<AsymFrame> {
    let mut frame = frame_vectors(sys, c, lambda, portrait, Limit::Harmonic)?;
    let h = std::f64::consts::PI * frame.ypoint * structured_block(&frame, -1.0);
    frame.predicted = Some(Predicted::Harmonic { h });
    Ok(frame)
}

/// Soliton frame with the `1/rho^2` and `ln rho` blocks at the given
/// `rho`, and `M''` from the momentum integrals when `with_m2` is set.
pub fn soliton_hessian_prediction(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    portrait: &PhasePortrait,
    rho: f64,
    with_m2: bool,
) -> Result<AsymFrame> {
    let mut frame = frame_vectors(sys, c, lambda, portrait, Limit::Soliton)?;
    let a2 = frame.coeffs.a * frame.coeffs.a;
    let h_s = portrait.h_s();
    let lead_scale = frame.ypoint * 2.0 * a2 / (h_s * h_s);
    let lead = lead_scale * (1.0 + rho) / (rho * rho) * (&frame.v * frame.v.transpose());
    let log_block = frame.ypoint * structured_block(&frame, 1.0);
    let m2 = if with_m2 {
        let u_star = sys.slaved_u(portrait.v_s, c, lambda)?;
        Some(
            momentum_derivatives(sys, c, (portrait.v_s, u_star), MomentumMethod::Integral)?.d2m,
        )
    } else {
        None
    };
    frame.predicted = Some(Predicted::Soliton {
        rho,
        lead,
        log_block,
        m2,
    });
    Ok(frame)
}

/// Residual record from comparing the differenced Hessian against the
/// limit prediction.
#[derive(Debug, Clone, Serialize)]
pub struct HessianComparison {
    pub which: Limit,
    /// The limit's small parameter: `delta` (harmonic) or `rho` (soliton).
    pub small: f64,
    /// Harmonic: `|H - H_pred| / |H_pred|` in the spectral norm.
    /// Soliton: spectral norm of the remainder after removing the
    /// `1/rho^2` and `ln rho` blocks (bounded as `rho -> 0`).
    pub residual: f64,
    /// Soliton: `E . remainder . E`, which stays bounded.
    pub ee_residual: Option<f64>,
    /// Soliton: `S . H S`.
    pub s_h_s: Option<f64>,
    /// Soliton: `|S . H S - M''|`.
    pub scalar_check: Option<f64>,
    pub m2: Option<f64>,
}

fn spectral_norm(h: &DMatrix<f64>) -> f64 {
    h.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, e| m.max(e.abs()))
}

/// Differences the Hessian at `params` and compares against the requested
/// limit expansion.
pub fn compare_hessian(sys: &SystemSpec, params: &Params, which: Limit) -> Result<HessianComparison> {
    let portrait = classify_portrait(sys, params.c, &params.lambda)?;
    let orbit = orbit_roots(sys, params, &portrait)?;
    let h_num = hessian_action(sys, params)?.h;
    match which {
        Limit::Harmonic => {
            let frame = harmonic_hessian_prediction(sys, params.c, &params.lambda, &portrait)?;
            let Some(Predicted::Harmonic { h }) = &frame.predicted else {
                unreachable!()
            };
            let residual = spectral_norm(&(&h_num - h)) / spectral_norm(h);
            Ok(HessianComparison {
                which,
                small: orbit.delta,
                residual,
                ee_residual: None,
                s_h_s: None,
                scalar_check: None,
                m2: None,
            })
        }
        Limit::Soliton => {
            let rho = orbit.rho.ok_or_else(|| {
                Error::AssumptionViolation("soliton comparison requires v1 and rho".into())
            })?;
            let frame =
                soliton_hessian_prediction(sys, params.c, &params.lambda, &portrait, rho, true)?;
            let Some(Predicted::Soliton {
                lead,
                log_block,
                m2,
                ..
            }) = &frame.predicted
            else {
                unreachable!()
            };
            let remainder = &h_num - lead - log_block * rho.ln();
            let s = frame.s.as_ref().expect("soliton frame has S");
            let e = e_vector(sys.dim());
            // The E and S contractions are taken as directional second
            // differences: the full-matrix step rules cannot resolve O(1)
            // quantities sitting under the 1/rho^2 block deep in the limit.
            let s_h_s = quadratic_form(sys, params, s, 0.3)?;
            let d2mu = quadratic_form(sys, params, &e, 1e-3)?;
            let ee_residual = d2mu - lead[(0, 0)] - log_block[(0, 0)] * rho.ln();
            Ok(HessianComparison {
                which,
                small: rho,
                residual: spectral_norm(&remainder),
                ee_residual: Some(ee_residual),
                s_h_s: Some(s_h_s),
                scalar_check: m2.map(|m2| (s_h_s - m2).abs()),
                m2: *m2,
            })
        }
    }
}

/// Sign sequence of the leading principal minors of the congruence-
/// transformed harmonic prediction, and the negative signature it yields.
#[derive(Debug, Clone, Serialize)]
pub struct Sigma0Report {
    #[serde(skip)]
    pub sigma0: DMatrix<f64>,
    pub minors: Vec<f64>,
    /// Signs starting with the leading `+1`.
    pub signs: Vec<i8>,
    /// Number of sign changes = predicted negative signature.
    pub n: usize,
}

/// Builds `Sigma_0 = P_0^T M P_0` with `M` the harmonic block structure
/// and `P_0 = (E  SV_0  [ST_0]  SW_0)`, then reads the Sylvester sign
/// sequence. Requires `alpha_0 != 0` and, for N = 2, nondegenerate slaving
/// `g_v(v_0) != 0`.
pub fn sigma0_sequence(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    portrait: &PhasePortrait,
) -> Result<Sigma0Report> {
    let frame = frame_vectors(sys, c, lambda, portrait, Limit::Harmonic)?;
    if frame.alpha.abs() <= 1e-12 {
        return Err(Error::DegenerateAlpha0(frame.alpha));
    }
    if sys.n == 2 {
        let g = sys.eval_g(portrait.v_0, c, sys.lambda2(lambda), 1)?;
        if g[1].abs() <= 1e-12 {
            return Err(Error::DegenerateSlaving(g[1]));
        }
    }
    let s = build_s(sys);
    let p = basis_p(&frame, &s)?;
    let m = structured_block(&frame, -1.0);
    let sigma0 = p.transform(&m);

    let dim = sigma0.nrows();
    let mut minors = Vec::with_capacity(dim);
    for k in 1..=dim {
        minors.push(sigma0.view((0, 0), (k, k)).clone_owned().lu().determinant());
    }
    let mut signs: Vec<i8> = vec![1];
    signs.extend(minors.iter().map(|&m| if m < 0.0 { -1i8 } else { 1i8 }));
    let n = signs.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(Sigma0Report {
        sigma0,
        minors,
        signs,
        n,
    })
}

/// One truncated-expansion residual: the measured defect and the power of
/// the small parameter it should scale with.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualItem {
    pub label: &'static str,
    pub residual: f64,
    /// Expected order: residual = O(small^order).
    pub order: f64,
}

/// Residuals of the root expansions at the orbit carried by `params`.
#[derive(Debug, Clone, Serialize)]
pub struct RootExpansionReport {
    pub which: Limit,
    /// `mu - mu_0` (harmonic) or `mu_s - mu` (soliton).
    pub small: f64,
    pub items: Vec<ResidualItem>,
}

/// Compares the exact orbit roots against the truncated expansions in
/// `sqrt(mu - mu_0)` resp. `sqrt(mu_s - mu)`.
pub fn root_expansion_check(
    sys: &SystemSpec,
    params: &Params,
    portrait: &PhasePortrait,
    which: Limit,
) -> Result<RootExpansionReport> {
    let orbit = orbit_roots(sys, params, portrait)?;
    let coeffs = limit_coeffs(sys, params.c, &params.lambda, portrait, which)?;
    let (a, b, cc) = (coeffs.a, coeffs.b, coeffs.cc);
    let mut items = Vec::new();
    let small;
    match which {
        Limit::Harmonic => {
            small = params.mu - portrait.mu_0;
            let r = small.sqrt();
            items.push(ResidualItem {
                label: "v2_to_3_2",
                residual: (orbit.v2 - (portrait.v_0 - a * r + b * small)).abs(),
                order: 1.5,
            });
            items.push(ResidualItem {
                label: "v3_to_3_2",
                residual: (orbit.v3 - (portrait.v_0 + a * r + b * small)).abs(),
                order: 1.5,
            });
            items.push(ResidualItem {
                label: "m_drift",
                residual: (orbit.m - (portrait.v_0 + b * small)).abs(),
                order: 2.0,
            });
            items.push(ResidualItem {
                label: "delta_amplitude",
                residual: (orbit.delta - (a * r + cc * small * r)).abs(),
                order: 2.5,
            });
        }
        Limit::Soliton => {
            small = portrait.mu_s - params.mu;
            let r = small.sqrt();
            let p = coeffs.p.expect("soliton coeffs carry p");
            if let Some(v1) = orbit.v1 {
                items.push(ResidualItem {
                    label: "v1_to_3_2",
                    residual: (v1 - (portrait.v_s - a * r + b * small)).abs(),
                    order: 1.5,
                });
                items.push(ResidualItem {
                    label: "v1_to_2",
                    residual: (v1 - (portrait.v_s - a * r + b * small - cc * small * r)).abs(),
                    order: 2.0,
                });
            }
            items.push(ResidualItem {
                label: "v2_to_3_2",
                residual: (orbit.v2 - (portrait.v_s + a * r + b * small)).abs(),
                order: 1.5,
            });
            items.push(ResidualItem {
                label: "v2_to_2",
                residual: (orbit.v2 - (portrait.v_s + a * r + b * small + cc * small * r)).abs(),
                order: 2.0,
            });
            items.push(ResidualItem {
                label: "v3_linear",
                residual: (orbit.v3 - (portrait.v_sup - p * small)).abs(),
                order: 2.0,
            });
        }
    }
    Ok(RootExpansionReport {
        which,
        small,
        items,
    })
}
