//! Panel-adaptive Gauss--Legendre quadrature.
//!
//! Nodes and weights are generated once per order by Newton iteration on
//! the Legendre recurrence. Adaptive routines double the panel count until
//! two successive estimates agree to the requested relative tolerance or
//! the panel cap is reached; integrands are analytic after the callers'
//! desingularizing substitutions, so convergence is geometric in practice.

use std::sync::OnceLock;

/// Panel cap for the doubling strategy (2^14 panels).
pub const MAX_DOUBLINGS: u32 = 14;

/// Default relative stopping tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GlRule {
    /// Nodes on (-1, 1).
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GlRule {
    fn compute(n: usize) -> Self {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi-style initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_and_deriv(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_deriv(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        GlRule { nodes, weights }
    }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule16() -> &'static GlRule {
    static RULE: OnceLock<GlRule> = OnceLock::new();
    RULE.get_or_init(|| GlRule::compute(16))
}

fn rule32() -> &'static GlRule {
    static RULE: OnceLock<GlRule> = OnceLock::new();
    RULE.get_or_init(|| GlRule::compute(32))
}

/// Fixed n-point Gauss--Legendre on (a, b).
pub fn fixed<F: FnMut(f64) -> f64>(rule: &GlRule, mut f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Adaptive scalar integral of `f` over (a, b) by panel doubling with
/// 16-point panels. Stops at `rel_tol` agreement between successive
/// doublings or at the panel cap, returning the last estimate.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let rule = rule16();
    let mut prev = f64::NAN;
    for k in 0..=MAX_DOUBLINGS {
        let panels = 1usize << k;
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for j in 0..panels {
            let lo = a + j as f64 * h;
            total += fixed(rule, &mut f, lo, lo + h);
        }
        if k > 0 && (total - prev).abs() <= rel_tol * total.abs().max(f64::MIN_POSITIVE) {
            return total;
        }
        prev = total;
    }
    prev
}

/// Adaptive vector-valued integral: `f(x, out)` fills `out` with the
/// integrand components. Convergence is tested in the max norm relative
/// to the max-norm of the current estimate.
pub fn adaptive_vec<F: FnMut(f64, &mut [f64])>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Vec<f64> {
    let rule = rule16();
    let mut prev = vec![f64::NAN; dim];
    let mut buf = vec![0.0; dim];
    for k in 0..=MAX_DOUBLINGS {
        let panels = 1usize << k;
        let h = (b - a) / panels as f64;
        let mut total = vec![0.0; dim];
        for j in 0..panels {
            let lo = a + j as f64 * h;
            let half = 0.5 * h;
            let mid = lo + half;
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                f(mid + half * x, &mut buf);
                for (t, &v) in total.iter_mut().zip(buf.iter()) {
                    *t += w * half * v;
                }
            }
        }
        if k > 0 {
            let scale = total.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let diff = total
                .iter()
                .zip(&prev)
                .fold(0.0f64, |m, (x, p)| m.max((x - p).abs()));
            if diff <= rel_tol * scale.max(f64::MIN_POSITIVE) {
                return total;
            }
        }
        prev = total;
    }
    prev
}

/// 32x32 tensor Gauss--Legendre over the unit square.
pub fn tensor2<F: FnMut(f64, f64) -> f64>(mut f: F) -> f64 {
    let rule = rule32();
    let mut acc = 0.0;
    for (&xs, &ws) in rule.nodes.iter().zip(&rule.weights) {
        let s = 0.5 * (xs + 1.0);
        for (&xt, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let t = 0.5 * (xt + 1.0);
            acc += ws * wt * f(s, t);
        }
    }
    acc * 0.25
}

/// 16^3 tensor Gauss--Legendre over the unit cube.
pub fn tensor3<F: FnMut(f64, f64, f64) -> f64>(mut f: F) -> f64 {
    let rule = rule16();
    let mut acc = 0.0;
    for (&xr, &wr) in rule.nodes.iter().zip(&rule.weights) {
        let r = 0.5 * (xr + 1.0);
        for (&xs, &ws) in rule.nodes.iter().zip(&rule.weights) {
            let s = 0.5 * (xs + 1.0);
            for (&xt, &wt) in rule.nodes.iter().zip(&rule.weights) {
                let t = 0.5 * (xt + 1.0);
                acc += wr * ws * wt * f(r, s, t);
            }
        }
    }
    acc * 0.125
}
