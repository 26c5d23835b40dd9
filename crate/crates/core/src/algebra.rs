//! The impulse matrix and the congruence bases built from it.
//!
//! The symmetric matrix `S` is defined by `X . S X / 2 = Q(U) - q` for
//! vectors `X = (1, U, q)`: corners `-1`, central block `B^{-1}`, zeros
//! elsewhere. It encodes the orthogonality relations between the frame
//! vectors `V`, `W`, `Z`, `T` at the center and saddle points, which in
//! turn make the congruence bases `P = (E  SV  [ST]  SW)` the right
//! coordinates for reading off the negative signature of the action
//! Hessian in both limits.

use nalgebra::{DMatrix, DVector};

use crate::asymptotics::AsymFrame;
use crate::model::SystemSpec;
use crate::{Error, Result};

/// The symmetric nonsingular matrix with `X . S X / 2 = Q(U) - q`.
#[derive(Debug, Clone)]
pub struct SMatrix {
    s: DMatrix<f64>,
}

impl SMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.s * x
    }

    /// The quadratic form `x . S y / 2`.
    pub fn half_form(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.s * y))
    }
}

/// Builds `S`: `S[0][N+1] = S[N+1][0] = -1`, central `N x N` block equal
/// to `B^{-1}`, all other entries zero.
pub fn build_s(sys: &SystemSpec) -> SMatrix {
    let dim = sys.dim();
    let mut s = DMatrix::zeros(dim, dim);
    s[(0, dim - 1)] = -1.0;
    s[(dim - 1, 0)] = -1.0;
    match sys.n {
        1 => s[(1, 1)] = 1.0 / sys.b,
        _ => {
            s[(1, 2)] = 1.0 / sys.b;
            s[(2, 1)] = 1.0 / sys.b;
        }
    }
    SMatrix { s }
}

/// The first canonical basis vector `E = (1, 0, ..., 0)` of length N+2.
pub fn e_vector(dim: usize) -> DVector<f64> {
    let mut e = DVector::zeros(dim);
    e[0] = 1.0;
    e
}

/// Residuals of the ten orthogonality relations satisfied by the frame
/// vectors: `V.SV`, `V.SW`, `V.ST`, `V.SZ + W.SW`, `T.ST`, `T.SZ`,
/// `E.V - 1`, `E.W`, `E.Z`, `E.T`.
#[derive(Debug, Clone)]
pub struct OrthoResiduals {
    pub residuals: [f64; 10],
    pub max: f64,
}

pub fn verify_orthogonality(frame: &AsymFrame, s: &SMatrix) -> OrthoResiduals {
    let (v, w, z, t) = (&frame.v, &frame.w, &frame.z, &frame.t);
    let form = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(s.matrix() * b));
    let residuals = [
        form(v, v),
        form(v, w),
        form(v, t),
        form(v, z) + form(w, w),
        form(t, t),
        form(t, z),
        v[0] - 1.0,
        w[0],
        z[0],
        t[0],
    ];
    let max = residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    OrthoResiduals { residuals, max }
}

/// Congruence basis `P = (E  SV  [ST]  SW)` at a limit point, with the
/// `ST` column present only for N = 2.
#[derive(Debug, Clone)]
pub struct BasisP {
    pub p: DMatrix<f64>,
    pub det: f64,
}

impl BasisP {
    /// The congruence transform `H -> P^T H P`, which preserves signature.
    pub fn transform(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        self.p.transpose() * h * &self.p
    }
}

pub fn basis_p(frame: &AsymFrame, s: &SMatrix) -> Result<BasisP> {
    let dim = frame.v.len();
    let mut p = DMatrix::zeros(dim, dim);
    p.set_column(0, &e_vector(dim));
    p.set_column(1, &s.apply(&frame.v));
    if dim == 4 {
        p.set_column(2, &s.apply(&frame.t));
        p.set_column(3, &s.apply(&frame.w));
    } else {
        p.set_column(2, &s.apply(&frame.w));
    }
    let det = p.clone().lu().determinant();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularBasis(det));
    }
    Ok(BasisP { p, det })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Poly;

    #[test]
    fn s_matrix_shapes() {
        let sys = SystemSpec::new_qkdv(
            1.0,
            Poly::new(vec![0.0, 0.0, 0.0, -1.0 / 6.0]),
            Poly::constant(1.0),
            [-4.0, 4.0],
        )
        .unwrap();
        let s = build_s(&sys);
        let expect =
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
        assert_eq!(s.matrix(), &expect);

        let sys2 = SystemSpec::new_euler_korteweg(
            -1.0,
            Poly::zero(),
            Poly::constant(1.0),
            Poly::constant(1.0),
            [-4.0, 4.0],
        )
        .unwrap();
        let s2 = build_s(&sys2);
        assert_eq!(s2.matrix()[(1, 2)], -1.0);
        assert_eq!(s2.matrix()[(2, 1)], -1.0);
        assert_eq!(s2.matrix()[(1, 1)], 0.0);
    }

    #[test]
    fn half_form_is_impulse_defect() {
        // X = (1, 2, 2) with N = 1, b = 1: Q(U) - q = 2 - 2 = 0.
        let sys = SystemSpec::new_qkdv(
            1.0,
            Poly::new(vec![0.0, 0.0, 0.0, -1.0 / 6.0]),
            Poly::constant(1.0),
            [-4.0, 4.0],
        )
        .unwrap();
        let s = build_s(&sys);
        let x = DVector::from_vec(vec![1.0, 2.0, 2.0]);
        assert!((s.half_form(&x, &x) - 0.0).abs() < 1e-15);
    }
}
