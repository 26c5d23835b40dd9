//! System class and effective potential.
//!
//! A system is either scalar (N = 1, quasilinear KdV type) or a 2-component
//! Euler--Korteweg type model with kinetic density `tau(v) u^2 / 2` and the
//! off-diagonal coupling matrix `B = [[0, b], [b, 0]]`. The traveling-wave
//! profile reduction leaves a single scalar potential
//!
//! `W(v; c, lambda) = -f(v) + tau(v) g(v; c, lambda_2)^2 / 2 - lambda_1 v`
//! (N = 2), resp. `W(v; c, lambda) = -f(v) - (c/2b) v^2 - lambda v` (N = 1),
//!
//! with the slaving function `g(v; c, lambda) = -((c/b) v + lambda)/tau(v)`
//! and the impulse density `q = v g / b` (N = 2), `q = v^2 / 2b` (N = 1).
//! Everything here is evaluated with exact polynomial/rational derivatives;
//! no numerical differentiation happens in this module.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Highest v-derivative order supported by the model evaluators.
pub const MAX_ORDER: usize = 4;

/// Real polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Poly { coeffs: vec![c] }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .unwrap_or(0)
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * v + c)
    }

    /// Value and derivatives up to `order` in one Horner-style pass.
    /// `out[k] = p^(k)(v)`.
    pub fn eval_derivs(&self, v: f64, out: &mut [f64]) {
        out.fill(0.0);
        let order = out.len() - 1;
        for &a in self.coeffs.iter().rev() {
            for k in (1..=order).rev() {
                out[k] = out[k] * v + out[k - 1];
            }
            out[0] = out[0] * v + a;
        }
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate().skip(2) {
            fact *= k as f64;
            *o *= fact;
        }
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        }
    }
}

/// Wave parameters `(mu, lambda, c)`, the N+2 coordinates the action
/// integral depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub lambda: Vec<f64>,
    pub c: f64,
}

impl Params {
    pub fn new(mu: f64, lambda: Vec<f64>, c: f64) -> Self {
        Params { mu, lambda, c }
    }

    /// Packs `(mu, lambda.., c)` into a vector, the ordering used by all
    /// gradients and Hessians.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.lambda.len() + 2);
        v.push(self.mu);
        v.extend_from_slice(&self.lambda);
        v.push(self.c);
        DVector::from_vec(v)
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        let n = v.len() - 2;
        Params {
            mu: v[0],
            lambda: v.as_slice()[1..1 + n].to_vec(),
            c: v[v.len() - 1],
        }
    }
}

/// Parameter gradient of `Z(v; mu, lambda, c) = mu - W(v; c, lambda)` and
/// its first two v-derivatives, the vectors `V`, `W`, `Z` of the limit
/// frames.
#[derive(Debug, Clone, PartialEq)]
pub struct GradZ {
    /// `grad Z = (1, v, [g,] q)`.
    pub v: DVector<f64>,
    /// `grad Z_v`.
    pub w: DVector<f64>,
    /// `grad Z_vv`.
    pub z: DVector<f64>,
}

/// The Hamiltonian model: dimension, coupling constant, energy density
/// pieces and the interval on which `kappa` (and `tau`) are positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(rename = "N")]
    pub n: u8,
    pub b: f64,
    pub f: Poly,
    pub kappa: Poly,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Poly>,
    pub domain: [f64; 2],
}

impl SystemSpec {
    /// Scalar (qKdV-type) system.
    pub fn new_qkdv(b: f64, f: Poly, kappa: Poly, domain: [f64; 2]) -> Result<Self> {
        let sys = SystemSpec {
            n: 1,
            b,
            f,
            kappa,
            tau: None,
            domain,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// 2-component (Euler--Korteweg-type) system.
    pub fn new_euler_korteweg(
        b: f64,
        f: Poly,
        kappa: Poly,
        tau: Poly,
        domain: [f64; 2],
    ) -> Result<Self> {
        let sys = SystemSpec {
            n: 2,
            b,
            f,
            kappa,
            tau: Some(tau),
            domain,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sys: SystemSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidSystem(e.to_string()))?;
        sys.validate()?;
        Ok(sys)
    }

    /// Parameter-space dimension N + 2.
    pub fn dim(&self) -> usize {
        self.n as usize + 2
    }

    /// Positivity of `kappa` (and `tau` for N = 2) is checked by dense
    /// sampling over the domain plus the endpoints; polynomial positivity
    /// certification is deliberately out of scope.
    pub fn validate(&self) -> Result<()> {
        if self.n != 1 && self.n != 2 {
            return Err(Error::InvalidSystem(format!("N must be 1 or 2, got {}", self.n)));
        }
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(Error::InvalidSystem("b must be nonzero and finite".into()));
        }
        let [lo, hi] = self.domain;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::InvalidSystem(format!("bad domain [{lo}, {hi}]")));
        }
        match (self.n, &self.tau) {
            (1, Some(_)) => {
                return Err(Error::InvalidSystem("tau must be absent when N = 1".into()))
            }
            (2, None) => return Err(Error::InvalidSystem("tau required when N = 2".into())),
            _ => {}
        }
        let check_positive = |p: &Poly, name: &str| -> Result<()> {
            const SAMPLES: usize = 1000;
            for i in 0..=SAMPLES {
                let v = lo + (hi - lo) * i as f64 / SAMPLES as f64;
                if p.eval(v) <= 0.0 {
                    return Err(Error::InvalidSystem(format!(
                        "{name}({v}) = {} is not positive on the domain",
                        p.eval(v)
                    )));
                }
            }
            Ok(())
        };
        check_positive(&self.kappa, "kappa")?;
        if let Some(tau) = &self.tau {
            check_positive(tau, "tau")?;
        }
        Ok(())
    }

    pub fn check_domain(&self, v: f64) -> Result<()> {
        let [lo, hi] = self.domain;
        if v < lo || v > hi || !v.is_finite() {
            return Err(Error::Domain { v, lo, hi });
        }
        Ok(())
    }

    pub(crate) fn lambda2(&self, lambda: &[f64]) -> f64 {
        debug_assert_eq!(lambda.len(), self.n as usize);
        lambda[self.n as usize - 1]
    }

    /// Slaving function `g = -((c/b) v + lambda)/tau(v)` and v-derivatives.
    /// N = 2 only.
    pub fn eval_g(&self, v: f64, c: f64, lambda2: f64, order: usize) -> Result<Vec<f64>> {
        if self.n != 2 {
            return Err(Error::Usage {
                required: 2,
                actual: self.n,
            });
        }
        self.check_domain(v)?;
        self.eval_g_unchecked(v, c, lambda2, order)
    }

    fn eval_g_unchecked(&self, v: f64, c: f64, lambda2: f64, order: usize) -> Result<Vec<f64>> {
        let mut g = vec![0.0; order + 1];
        self.g_into(v, c, lambda2, &mut g)?;
        Ok(g)
    }

    /// Non-allocating slaving evaluation: `out[k] = g^(k)(v)`.
    pub(crate) fn g_into(&self, v: f64, c: f64, lambda2: f64, out: &mut [f64]) -> Result<()> {
        let order = out.len() - 1;
        debug_assert!(order <= MAX_ORDER);
        let tau = self.tau.as_ref().expect("N = 2 has tau");
        let mut t = [0.0; MAX_ORDER + 1];
        tau.eval_derivs(v, &mut t[..=order]);
        if t[0] == 0.0 {
            return Err(Error::SingularSlaving { v });
        }
        // Numerator u(v) = -((c/b) v + lambda2), so u' = -c/b, u'' = 0.
        let mut u = [0.0; MAX_ORDER + 1];
        u[0] = -((c / self.b) * v + lambda2);
        if order >= 1 {
            u[1] = -c / self.b;
        }
        // u = g * tau: peel g^(k) off the Leibniz expansion.
        for k in 0..=order {
            let mut s = u[k];
            for j in 0..k {
                s -= binom(k, j) * out[j] * t[k - j];
            }
            out[k] = s / t[0];
        }
        Ok(())
    }

    /// Impulse density along the profile, `q = v g / b` (N = 2) or
    /// `q = v^2 / 2b` (N = 1), with v-derivatives.
    pub fn eval_q(&self, v: f64, c: f64, lambda2: f64, order: usize) -> Result<Vec<f64>> {
        self.check_domain(v)?;
        self.eval_q_unchecked(v, c, lambda2, order)
    }

    fn eval_q_unchecked(&self, v: f64, c: f64, lambda2: f64, order: usize) -> Result<Vec<f64>> {
        let mut q = vec![0.0; order + 1];
        self.q_into(v, c, lambda2, &mut q)?;
        Ok(q)
    }

    /// Non-allocating impulse evaluation: `out[k] = q^(k)(v)`.
    pub(crate) fn q_into(&self, v: f64, c: f64, lambda2: f64, out: &mut [f64]) -> Result<()> {
        let order = out.len() - 1;
        debug_assert!(order <= MAX_ORDER);
        match self.n {
            1 => {
                out.fill(0.0);
                out[0] = v * v / (2.0 * self.b);
                if order >= 1 {
                    out[1] = v / self.b;
                }
                if order >= 2 {
                    out[2] = 1.0 / self.b;
                }
            }
            _ => {
                let mut g = [0.0; MAX_ORDER + 1];
                self.g_into(v, c, lambda2, &mut g[..=order])?;
                // q = v g / b: Leibniz with the linear factor v.
                for k in 0..=order {
                    let lower = if k >= 1 { k as f64 * g[k - 1] } else { 0.0 };
                    out[k] = (v * g[k] + lower) / self.b;
                }
            }
        }
        Ok(())
    }

    /// Effective potential `W` and v-derivatives up to `order <= 4`,
    /// all analytic.
    pub fn eval_potential(&self, v: f64, c: f64, lambda: &[f64], order: usize) -> Result<Vec<f64>> {
        self.check_domain(v)?;
        self.eval_potential_unchecked(v, c, lambda, order)
    }

    pub(crate) fn eval_potential_unchecked(
        &self,
        v: f64,
        c: f64,
        lambda: &[f64],
        order: usize,
    ) -> Result<Vec<f64>> {
        let mut w = vec![0.0; order + 1];
        self.w_into(v, c, lambda, &mut w)?;
        Ok(w)
    }

    /// Non-allocating potential evaluation: `out[k] = W^(k)(v)`.
    pub(crate) fn w_into(&self, v: f64, c: f64, lambda: &[f64], w: &mut [f64]) -> Result<()> {
        let order = w.len() - 1;
        debug_assert!(order <= MAX_ORDER);
        let mut fv = [0.0; MAX_ORDER + 1];
        self.f.eval_derivs(v, &mut fv[..=order]);
        match self.n {
            1 => {
                let lam = lambda[0];
                let cb = c / self.b;
                w[0] = -fv[0] - 0.5 * cb * v * v - lam * v;
                if order >= 1 {
                    w[1] = -fv[1] - cb * v - lam;
                }
                if order >= 2 {
                    w[2] = -fv[2] - cb;
                }
                for k in 3..=order {
                    w[k] = -fv[k];
                }
            }
            _ => {
                let lam1 = lambda[0];
                let lam2 = self.lambda2(lambda);
                let tau = self.tau.as_ref().expect("N = 2 has tau");
                let mut t = [0.0; MAX_ORDER + 1];
                tau.eval_derivs(v, &mut t[..=order]);
                let mut g = [0.0; MAX_ORDER + 1];
                self.g_into(v, c, lam2, &mut g[..=order])?;
                // h = g^2 by Leibniz, then tau * h / 2.
                let mut h = [0.0; MAX_ORDER + 1];
                for k in 0..=order {
                    let mut s = 0.0;
                    for j in 0..=k {
                        s += binom(k, j) * g[j] * g[k - j];
                    }
                    h[k] = s;
                }
                for k in 0..=order {
                    let mut s = 0.0;
                    for j in 0..=k {
                        s += binom(k, j) * t[j] * h[k - j];
                    }
                    w[k] = -fv[k] + 0.5 * s;
                }
                w[0] -= lam1 * v;
                if order >= 1 {
                    w[1] -= lam1;
                }
            }
        }
        Ok(())
    }

    /// Convenience: the k-th v-derivative of `W` alone.
    pub fn potential_deriv(&self, v: f64, c: f64, lambda: &[f64], k: usize) -> Result<f64> {
        Ok(self.eval_potential(v, c, lambda, k)?[k])
    }

    /// `Z(v) = mu - W(v)` at given parameters.
    pub fn z_value(&self, v: f64, params: &Params) -> Result<f64> {
        Ok(params.mu - self.eval_potential(v, params.c, &params.lambda, 0)?[0])
    }

    /// Parameter gradient of `Z` and its first two v-derivatives.
    pub fn grad_z(&self, v: f64, c: f64, lambda: &[f64]) -> Result<GradZ> {
        self.check_domain(v)?;
        let dim = self.dim();
        let mut gv = DVector::zeros(dim);
        let mut gw = DVector::zeros(dim);
        let mut gz = DVector::zeros(dim);
        let lam2 = self.lambda2(lambda);
        let q = self.eval_q_unchecked(v, c, lam2, 2)?;
        gv[0] = 1.0;
        gv[1] = v;
        gw[1] = 1.0;
        match self.n {
            1 => {
                gv[2] = q[0];
                gw[2] = q[1];
                gz[2] = q[2];
            }
            _ => {
                let g = self.eval_g_unchecked(v, c, lam2, 2)?;
                gv[2] = g[0];
                gv[3] = q[0];
                gw[2] = g[1];
                gw[3] = q[1];
                gz[2] = g[2];
                gz[3] = q[2];
            }
        }
        Ok(GradZ { v: gv, w: gw, z: gz })
    }

    /// The rank-one factor of `-grad^2 Z`: `(0, 0, 1, v/b)/sqrt(tau(v))`
    /// for N = 2, the zero vector for N = 1.
    pub fn t_vector(&self, v: f64) -> Result<DVector<f64>> {
        self.check_domain(v)?;
        let mut t = DVector::zeros(self.dim());
        if self.n == 2 {
            let tau = self.tau.as_ref().expect("N = 2 has tau").eval(v);
            if tau <= 0.0 {
                return Err(Error::SingularSlaving { v });
            }
            let s = tau.sqrt().recip();
            t[2] = s;
            t[3] = s * v / self.b;
        }
        Ok(t)
    }

    /// Parameters making `(v*, u*)` a critical point of the profile system:
    /// `W_v(v*; c, lambda) = 0` and `mu = W(v*; c, lambda)`.
    pub fn params_for_state(&self, v_star: f64, u_star: Option<f64>, c: f64) -> Result<Params> {
        self.check_domain(v_star)?;
        let fp = self.f.derivative().eval(v_star);
        let lambda = match self.n {
            1 => vec![-fp - (c / self.b) * v_star],
            _ => {
                let u = u_star.ok_or_else(|| {
                    Error::InvalidSystem("u* required for N = 2 stationary state".into())
                })?;
                let tau = self.tau.as_ref().expect("N = 2 has tau");
                let lam2 = -tau.eval(v_star) * u - (c / self.b) * v_star;
                let lam1 = -fp - 0.5 * tau.derivative().eval(v_star) * u * u - (c / self.b) * u;
                vec![lam1, lam2]
            }
        };
        let w = self.eval_potential(v_star, c, &lambda, 1)?;
        debug_assert!(
            w[1].abs() <= 1e-12 * w[0].abs().max(1.0),
            "construction failed: W_v(v*) = {}",
            w[1]
        );
        Ok(Params::new(w[0], lambda, c))
    }

    /// Slaved second component at a point: `u = g(v; c, lambda_2)` for
    /// N = 2, absent for N = 1.
    pub fn slaved_u(&self, v: f64, c: f64, lambda: &[f64]) -> Result<Option<f64>> {
        if self.n == 1 {
            return Ok(None);
        }
        Ok(Some(self.eval_g(v, c, self.lambda2(lambda), 0)?[0]))
    }
}

fn binom(n: usize, k: usize) -> f64 {
    const TABLE: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    TABLE[n][k]
}
