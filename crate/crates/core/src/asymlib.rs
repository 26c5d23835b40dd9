//! Elementary asymptotics toolkit: root expansions of `W - eps` near a
//! nondegenerate minimum, and log-series expansions of the parametric
//! integrals
//!
//! `F(rho) = int_0^1 f sqrt(x(x+rho)) dx`,
//! `G(rho) = int_0^1 g / sqrt(x(x+rho)) dx`,
//! `H(rho) = int_0^1 h / sqrt(x(x+rho)^3) dx`,
//!
//! each paired with a numeric evaluator so the truncated series can be
//! checked order-by-order. Integrands of the form `smooth / sqrt(1 - x)`
//! are supported through a declared endpoint flag; the quadratures then
//! substitute `x = 1 - s^2`.

use crate::model::{Poly, SystemSpec};
use crate::quadrature::reduced_r;
use crate::{gl, Error, Result};

const LN4: f64 = 1.3862943611198906; // ln 4

/// A scalar function with derivatives to order 3 and an optional declared
/// `1/sqrt(1-x)` right-endpoint factor.
pub trait CFunc3 {
    fn eval(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
    fn inv_sqrt_endpoint(&self) -> bool {
        false
    }
}

/// Closure bundle implementing [`CFunc3`].
pub struct FnWithDerivs<F0, F1, F2, F3> {
    pub f: F0,
    pub df: F1,
    pub d2f: F2,
    pub d3f: F3,
    pub inv_sqrt_endpoint: bool,
}

impl<F0, F1, F2, F3> CFunc3 for FnWithDerivs<F0, F1, F2, F3>
where
    F0: Fn(f64) -> f64,
    F1: Fn(f64) -> f64,
    F2: Fn(f64) -> f64,
    F3: Fn(f64) -> f64,
{
    fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn d1(&self, x: f64) -> f64 {
        (self.df)(x)
    }
    fn d2(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }
    fn d3(&self, x: f64) -> f64 {
        (self.d3f)(x)
    }
    fn inv_sqrt_endpoint(&self) -> bool {
        self.inv_sqrt_endpoint
    }
}

impl CFunc3 for Poly {
    fn eval(&self, x: f64) -> f64 {
        Poly::eval(self, x)
    }
    fn d1(&self, x: f64) -> f64 {
        self.derivative().eval(x)
    }
    fn d2(&self, x: f64) -> f64 {
        self.derivative().derivative().eval(x)
    }
    fn d3(&self, x: f64) -> f64 {
        self.derivative().derivative().derivative().eval(x)
    }
}

// ---------------------------------------------------------------------------
// Root expansions
// ---------------------------------------------------------------------------

/// Coefficients of the two-sided root expansion of `W - eps` about a
/// nondegenerate minimum at the origin:
/// `z_pm = pm sqrt(2 eps/alpha) - beta eps/(3 alpha^2) pm eta eps^{3/2} + O(eps^2)`.
#[derive(Debug, Clone)]
pub struct RootExpansion {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

/// Exact coefficients from the derivatives of `W` at 0. Requires the
/// caller to have pre-shifted so that `W(0) = W'(0) = 0` and `W''(0) > 0`.
pub fn root_coeffs(w: &Poly) -> Result<RootExpansion> {
    let mut d = [0.0; 5];
    w.eval_derivs(0.0, &mut d);
    let scale = d.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    if d[0].abs() > 1e-12 * scale || d[1].abs() > 1e-12 * scale {
        return Err(Error::AssumptionViolation(format!(
            "root expansion requires W(0) = W'(0) = 0, got {} and {}",
            d[0], d[1]
        )));
    }
    let (alpha, beta, gamma) = (d[2], d[3], d[4]);
    if alpha <= 0.0 {
        return Err(Error::NonpositiveAlpha(alpha));
    }
    let eta =
        (5.0 / 3.0 * beta * beta - alpha * gamma) / (6.0 * alpha.powi(3) * (2.0 * alpha).sqrt());
    Ok(RootExpansion {
        alpha,
        beta,
        gamma,
        eta,
    })
}

impl RootExpansion {
    pub fn z_plus(&self, eps: f64) -> f64 {
        (2.0 * eps / self.alpha).sqrt() - self.beta * eps / (3.0 * self.alpha * self.alpha)
            + self.eta * eps.powf(1.5)
    }

    pub fn z_minus(&self, eps: f64) -> f64 {
        -(2.0 * eps / self.alpha).sqrt() - self.beta * eps / (3.0 * self.alpha * self.alpha)
            - self.eta * eps.powf(1.5)
    }

    pub fn dz_plus(&self, eps: f64) -> f64 {
        1.0 / (2.0 * self.alpha * eps).sqrt() - self.beta / (3.0 * self.alpha * self.alpha)
            + 1.5 * self.eta * eps.sqrt()
    }

    pub fn dz_minus(&self, eps: f64) -> f64 {
        -1.0 / (2.0 * self.alpha * eps).sqrt() - self.beta / (3.0 * self.alpha * self.alpha)
            - 1.5 * self.eta * eps.sqrt()
    }
}

// ---------------------------------------------------------------------------
// Log-series
// ---------------------------------------------------------------------------

/// A truncated expansion `d0/rho + sum_k (a_k rho^k ln rho + b_k rho^k)`.
#[derive(Debug, Clone)]
pub struct LogSeries {
    pub inv_rho: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl LogSeries {
    pub fn eval(&self, rho: f64) -> f64 {
        let lr = rho.ln();
        let mut acc = self.inv_rho / rho;
        let mut p = 1.0;
        for k in 0..self.a.len().max(self.b.len()) {
            let a = self.a.get(k).copied().unwrap_or(0.0);
            let b = self.b.get(k).copied().unwrap_or(0.0);
            acc += (a * lr + b) * p;
            p *= rho;
        }
        acc
    }
}

/// Peeled remainders `g_1 = (g - g(0))/x`, `g_2 = (g_1 - g_1(0))/x`,
/// `g_3 = (g_2 - g_2(0))/x`, switching to the Taylor expansion at the
/// origin where the quotients would cancel.
fn peel(g: &dyn CFunc3, level: usize, x: f64) -> f64 {
    let (g0, g1, g2, g3) = (g.eval(0.0), g.d1(0.0), g.d2(0.0), g.d3(0.0));
    if x < 1e-3 {
        return match level {
            1 => g1 + x * g2 / 2.0 + x * x * g3 / 6.0,
            2 => g2 / 2.0 + x * g3 / 6.0,
            _ => g3 / 6.0,
        };
    }
    match level {
        1 => (g.eval(x) - g0) / x,
        2 => (g.eval(x) - g0 - x * g1) / (x * x),
        _ => (g.eval(x) - g0 - x * g1 - 0.5 * x * x * g2) / (x * x * x),
    }
}

/// Integral of a possibly endpoint-singular peeled remainder over (0, 1).
fn integral_01(g: &dyn CFunc3, level: usize) -> f64 {
    if g.inv_sqrt_endpoint() {
        // x = 1 - s^2 turns smooth/sqrt(1-x) into a smooth integrand.
        gl::adaptive(|s| 2.0 * s * peel(g, level, 1.0 - s * s), 0.0, 1.0, 1e-12)
    } else {
        gl::adaptive(|x| peel(g, level, x), 0.0, 1.0, 1e-12)
    }
}

/// Series coefficients of `G(rho) = int_0^1 g / sqrt(x(x+rho)) dx` to
/// order `rho^2`:
/// `a0 = -g(0)`, `b0 = int g_1 + g(0) ln 4`, `a1 = g'(0)/2`,
/// `b1 = (g(0) + (1 - ln 4) g'(0) - int g_2)/2`, `a2 = -(3/16) g''(0)`,
/// `b2 = (-3 g(0) - 6 g'(0) + (g''(0)/2)(6 ln 4 - 7) + 6 int g_3)/16`.
pub fn g_expansion(g: &dyn CFunc3) -> LogSeries {
    let (g0, g1, g2) = (g.eval(0.0), g.d1(0.0), g.d2(0.0));
    let i1 = integral_01(g, 1);
    let i2 = integral_01(g, 2);
    let i3 = integral_01(g, 3);
    LogSeries {
        inv_rho: 0.0,
        a: vec![-g0, 0.5 * g1, -3.0 / 16.0 * g2],
        b: vec![
            i1 + g0 * LN4,
            0.5 * (g0 + (1.0 - LN4) * g1 - i2),
            (-3.0 * g0 - 6.0 * g1 + 0.5 * g2 * (6.0 * LN4 - 7.0) + 6.0 * i3) / 16.0,
        ],
    }
}

/// Wraps `x f(x)/2`, the reduction `F'(rho) = G[x f / 2](rho)`.
struct HalfXTimes<'a> {
    f: &'a dyn CFunc3,
}

impl CFunc3 for HalfXTimes<'_> {
    fn eval(&self, x: f64) -> f64 {
        0.5 * x * self.f.eval(x)
    }
    fn d1(&self, x: f64) -> f64 {
        0.5 * (self.f.eval(x) + x * self.f.d1(x))
    }
    fn d2(&self, x: f64) -> f64 {
        0.5 * (2.0 * self.f.d1(x) + x * self.f.d2(x))
    }
    fn d3(&self, x: f64) -> f64 {
        0.5 * (3.0 * self.f.d2(x) + x * self.f.d3(x))
    }
    fn inv_sqrt_endpoint(&self) -> bool {
        self.f.inv_sqrt_endpoint()
    }
}

/// Series of `F(rho) = int_0^1 f sqrt(x(x+rho)) dx`:
/// `B0 = int x f`, `B1 = (1/2) int f`, `A2 = f(0)/8`, with `B2` recovered
/// from the term-by-term differentiation relations applied to
/// `F' = G[x f / 2]`.
pub fn f_expansion(f: &dyn CFunc3) -> LogSeries {
    let half = HalfXTimes { f };
    let inner = g_expansion(&half);
    let b0 = if f.inv_sqrt_endpoint() {
        gl::adaptive(
            |s| {
                let x = 1.0 - s * s;
                2.0 * s * x * f.eval(x)
            },
            0.0,
            1.0,
            1e-12,
        )
    } else {
        gl::adaptive(|x| x * f.eval(x), 0.0, 1.0, 1e-12)
    };
    // c_k = k A_k, d_k = k B_k + A_k with c_k = a_{k-1}[xf/2], d_k = b_{k-1}.
    let a1 = inner.a[0];
    let b1 = inner.b[0] - a1;
    let a2 = inner.a[1] / 2.0;
    let b2 = (inner.b[1] - a2) / 2.0;
    LogSeries {
        inv_rho: 0.0,
        a: vec![0.0, a1, a2],
        b: vec![b0, b1, b2],
    }
}

/// Series of `H(rho) = int_0^1 h / sqrt(x(x+rho)^3) dx` to its first
/// three terms `d0/rho + c1 ln rho + d1`: peeling `h = h(0) + x h_1` and
/// the exact kernel `int dx / sqrt(x(x+rho)^3) = 2/rho - 2/(1 + rho +
/// sqrt(1+rho))` give `d0 = 2 h(0)`, `c1 = -h'(0)`,
/// `d1 = -h(0) - 2 h'(0) + b0[h_1]`.
pub fn h_expansion(h: &dyn CFunc3) -> LogSeries {
    let (h0, h1) = (h.eval(0.0), h.d1(0.0));
    // b0[h_1] = int (h_1 - h_1(0))/x + h_1(0) ln 4 = int h_2 + h'(0) ln 4.
    let b0_h1 = integral_01(h, 2) + h1 * LN4;
    LogSeries {
        inv_rho: 2.0 * h0,
        a: vec![-h1],
        b: vec![-h0 - 2.0 * h1 + b0_h1],
    }
}

// ---------------------------------------------------------------------------
// Numeric evaluators (the verification oracles)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum KernelPower {
    Sqrt,
    InvSqrt,
    InvThreeHalves,
}

/// Splits (0,1) at 1/2: on the left `x = rho sinh^2(t/2)` removes the
/// `1/sqrt(x(x+rho))` kernel; on the right `x = 1 - s^2` removes a
/// declared `1/sqrt(1-x)` factor.
fn split_kernel_integral(g: &dyn CFunc3, rho: f64, power: KernelPower) -> f64 {
    let t_half = 2.0 * (0.5 / rho).sqrt().asinh();
    let left = gl::adaptive(
        |t: f64| {
            let sh = (0.5 * t).sinh();
            let ch = (0.5 * t).cosh();
            let x = rho * sh * sh;
            match power {
                // dx / sqrt(x(x+rho)) = dt
                KernelPower::InvSqrt => g.eval(x),
                // sqrt(x(x+rho)) dx = (rho sinh(t)/2)^2 dt
                KernelPower::Sqrt => {
                    let j = 0.5 * rho * t.sinh();
                    g.eval(x) * j * j
                }
                // dx / sqrt(x(x+rho)^3) = dt / (rho cosh^2(t/2))
                KernelPower::InvThreeHalves => g.eval(x) / (rho * ch * ch),
            }
        },
        0.0,
        t_half,
        1e-12,
    );
    let kernel = |x: f64| match power {
        KernelPower::InvSqrt => 1.0 / (x * (x + rho)).sqrt(),
        KernelPower::Sqrt => (x * (x + rho)).sqrt(),
        KernelPower::InvThreeHalves => 1.0 / (x * (x + rho).powi(3)).sqrt(),
    };
    let right = if g.inv_sqrt_endpoint() {
        gl::adaptive(
            |s: f64| {
                let x = 1.0 - s * s;
                2.0 * s * g.eval(x) * kernel(x)
            },
            0.0,
            0.5f64.sqrt(),
            1e-12,
        )
    } else {
        gl::adaptive(|x: f64| g.eval(x) * kernel(x), 0.5, 1.0, 1e-12)
    };
    left + right
}

/// Numeric `G(rho)`, the oracle for [`g_expansion`].
pub fn g_numeric(g: &dyn CFunc3, rho: f64) -> f64 {
    split_kernel_integral(g, rho, KernelPower::InvSqrt)
}

/// Numeric `F(rho)`, the oracle for [`f_expansion`].
pub fn f_numeric(f: &dyn CFunc3, rho: f64) -> f64 {
    split_kernel_integral(f, rho, KernelPower::Sqrt)
}

/// Numeric `H(rho)`, the oracle for [`h_expansion`].
pub fn h_numeric(h: &dyn CFunc3, rho: f64) -> f64 {
    split_kernel_integral(h, rho, KernelPower::InvThreeHalves)
}

// ---------------------------------------------------------------------------
// Reduced-potential symmetry
// ---------------------------------------------------------------------------

/// Max residual of `R(v, w, z) - R(permutation)` over all six node
/// permutations of each supplied triple.
pub fn symmetry_check_r(
    sys: &SystemSpec,
    c: f64,
    lambda: &[f64],
    triples: &[(f64, f64, f64)],
) -> Result<f64> {
    let mut max = 0.0f64;
    for &(v, w, z) in triples {
        let base = reduced_r(sys, v, w, z, c, lambda)?;
        for (a, b, d) in [(v, z, w), (w, v, z), (w, z, v), (z, v, w), (z, w, v)] {
            max = max.max((reduced_r(sys, a, b, d, c, lambda)? - base).abs());
        }
    }
    Ok(max)
}
