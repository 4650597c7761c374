//! Normal forms of the derivative matrices and the semi-invariants read off them.

use nalgebra::{SMatrix, SVector};
use num_bigint::BigInt;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::cartan::{connection_values, covariant_derivative_in, q, scalar_a, Derivatives, DiffAlgebra, RMat};
use crate::lie::{d_rho, GroupElement};
use crate::symbolic::{is_zero, Assumptions, Expr, TriBool};
use crate::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum NormalizationError {
    #[error("normalization needs a nonzero {0}")]
    Degenerate(&'static str),
    #[error("normalized matrix misses the expected pattern at {entry}: residual {residual:e}")]
    Residual { entry: String, residual: f64 },
    #[error("relation {0} does not hold identically")]
    Relation(String),
}

/// `s1, s2, s3` together with the base values of `a` and `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenericSemiInvariants<T> {
    pub a: T,
    pub d: T,
    pub s1: T,
    pub s2: T,
    pub s3: T,
}

/// `s11, s12, s13, s23, s33` together with the base value of `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegenerateSemiInvariants<T> {
    pub a: T,
    pub s11: T,
    pub s12: T,
    pub s13: T,
    pub s23: T,
    pub s33: T,
}

const RESIDUAL: f64 = 1e-8;

fn check<T: Scalar>(entry: impl FnOnce() -> String, got: T, want: T, scale: T) -> Result<(), NormalizationError> {
    let r = Float::abs(got - want) / scale;
    if r.to_f64() > RESIDUAL || !Float::is_finite(r) {
        return Err(NormalizationError::Residual { entry: entry(), residual: r.to_f64() });
    }
    Ok(())
}

/// Brings the 2×5 matrix of first derivatives of `(a, d)` to the normal form with second row
/// `(0, 0, 0, -2d, 3d)` and returns the first three entries of the first row.
pub fn normalize_f1<T: Scalar>(m: &[[T; 5]; 2], a: T, d: T) -> Result<GenericSemiInvariants<T>, NormalizationError> {
    if a.is_zero() {
        return Err(NormalizationError::Degenerate("a"));
    }
    if d.is_zero() {
        return Err(NormalizationError::Degenerate("d"));
    }
    let [c21, c22, c23] = [m[1][0], m[1][1], m[1][2]];
    let t = c21 / d;
    let u = -c22 / (T::of(5.0) * d);
    let v = (-u * t * d + u * c21 - t * c22 - c23) / (T::of(4.0) * d);
    let n = apply_f1(m, &GroupElement::unipotent(t, u, v));
    let scale = Float::abs(d) + m[1].iter().fold(T::zero(), |s, x| Float::max(s, Float::abs(*x)));
    let want = [T::zero(), T::zero(), T::zero(), T::of(-2.0) * d, T::of(3.0) * d];
    for (k, w) in want.iter().enumerate() {
        check(|| format!("row 2, column {}", k + 1), n[1][k], *w, scale)?;
    }
    Ok(GenericSemiInvariants { a, d, s1: n[0][0], s2: n[0][1], s3: n[0][2] })
}

/// `g · M = X1 M X2⁻¹` with `X2` the action of `Ad(g)` on the quotient by the span of `e3, e4, e5`.
pub fn apply_f1<T: Scalar>(m: &[[T; 5]; 2], g: &GroupElement<T>) -> [[T; 5]; 2] {
    let ad = g.adjoint();
    let x2: SMatrix<T, 5, 5> = ad.fixed_view::<5, 5>(0, 0).into_owned();
    let x2i = x2.try_inverse().expect("adjoint block is invertible");
    let w = g.weights_ad();
    let mut out = [[T::zero(); 5]; 2];
    for r in 0..2 {
        let row = SVector::<T, 5>::from_iterator(m[r].iter().copied()).transpose() * x2i;
        for k in 0..5 {
            out[r][k] = w[r] * row[k];
        }
    }
    out
}

/// `I1 = a s3 / (s1 s2)`.
pub fn invariant_i1<T: Scalar>(s: &GenericSemiInvariants<T>) -> T {
    s.a * s.s3 / (s.s1 * s.s2)
}

/// `I2 = a⁵ d / s3⁴`.
pub fn invariant_i2<T: Scalar>(s: &GenericSemiInvariants<T>) -> T {
    Float::powi(s.a, 5) * s.d / Float::powi(s.s3, 4)
}

/// Action of `e1 … e5` on `(a, a1, a2, a3)` as exact matrices.
pub fn rho_actions() -> [RMat; 5] {
    d_rho::<f64>().map(|m| {
        m.iter().map(|row| row.iter().map(|v| Rational::from_integer(BigInt::from(*v as i64))).collect()).collect()
    })
}

/// `(a, a1, a2, a3)` with `a1 = Da - 2 f_z a`, `a2 = a_z`, `a3 = a_y + f_zz a / 2`.
pub fn h_vector<R: DiffAlgebra>(dv: &mut Derivatives<R>, a: &R) -> [R; 4] {
    let fz = dv.get(0, 0, 1);
    let fzz = dv.get(0, 0, 2);
    let a1 = dv.total(a).minus(&fz.times(a).scaled(&q(2, 1)));
    let a2 = a.partial(crate::cartan::Coord::Z);
    let a3 = a.partial(crate::cartan::Coord::Y).plus(&fzz.times(a).scaled(&q(1, 2)));
    [a.clone(), a1, a2, a3]
}

/// The 4×8 matrix of covariant derivatives of `h = (a, a1, a2, a3)` followed by the columns
/// `-e_i · h`.
pub fn h1_in<R: DiffAlgebra>(dv: &mut Derivatives<R>) -> [[R; 8]; 4] {
    let a = scalar_a(dv);
    let h = h_vector(dv, &a);
    let conn = connection_values(dv);
    let actions = rho_actions();
    let cov = covariant_derivative_in(dv, &conn, &h, &actions);
    let vert: Vec<Vec<R>> = actions
        .iter()
        .map(|m| crate::cartan::rmat_apply(m, &h).into_iter().map(|v| v.scaled(&q(-1, 1))).collect())
        .collect();
    std::array::from_fn(|i| std::array::from_fn(|k| if k < 3 { cov[k][i].clone() } else { vert[k - 3][i].clone() }))
}

/// Symbolic `h1` matrix.
pub fn h1_matrix(f: &Expr) -> [[Expr; 8]; 4] {
    h1_in(&mut Derivatives::new(f.clone()))
}

/// The bracket relations `a22 = 0`, `a21 = a12 - a3`, `a31 = a13`, `a32 = a23` as expressions
/// that must vanish.
pub fn h1_relations(h: &[[Expr; 8]; 4]) -> [(&'static str, Expr); 4] {
    let a3 = &h[3][3] / Expr::int(2);
    [
        ("a22 = 0", h[2][1].clone()),
        ("a21 = a12 - a3", &h[2][0] - &h[1][1] + a3),
        ("a31 = a13", &h[3][0] - &h[1][2]),
        ("a32 = a23", &h[3][1] - &h[2][2]),
    ]
}

/// [`h1_matrix`] with the bracket relations verified by zero tests.
pub fn h1_matrix_checked(f: &Expr, asm: &Assumptions) -> Result<[[Expr; 8]; 4], NormalizationError> {
    let h = h1_matrix(f);
    for (name, e) in h1_relations(&h) {
        if is_zero(&e, asm) != TriBool::Zero {
            return Err(NormalizationError::Relation(name.to_string()));
        }
    }
    Ok(h)
}

/// `g · H = ρ(g) H Ad(g)⁻¹`.
pub fn apply_h1<T: Scalar>(h: &[[T; 8]; 4], g: &GroupElement<T>) -> [[T; 8]; 4] {
    let hm = SMatrix::<T, 4, 8>::from_fn(|i, k| h[i][k]);
    let adi = g.adjoint().try_inverse().expect("adjoint is invertible");
    let n = g.rho() * hm * adi;
    std::array::from_fn(|i| std::array::from_fn(|k| n[(i, k)]))
}

/// Normalizes `h1` so that the first covariant derivatives of `a` vanish and reads off
/// `s11, s12, s13, s23, s33`.
pub fn normalize_h1<T: Scalar>(h: &[[T; 8]; 4], a: T) -> Result<DegenerateSemiInvariants<T>, NormalizationError> {
    if a.is_zero() {
        return Err(NormalizationError::Degenerate("a"));
    }
    let (a1, a2, a3) = (h[0][0], h[0][1], h[0][2]);
    let t = -a1 / (T::of(5.0) * a);
    let u = a2 / a;
    let v = (T::of(5.0) * u * t * a + u * a1 - t * a2 - a3) / (T::of(4.0) * a);
    let n = apply_h1(h, &GroupElement::unipotent(t, u, v));
    let scale = h.iter().flatten().fold(Float::abs(a), |s, x| Float::max(s, Float::abs(*x)));
    for k in 0..3 {
        check(|| format!("row 1, column {}", k + 1), n[0][k], T::zero(), scale)?;
    }
    check(|| "a22".to_string(), n[2][1], T::zero(), scale)?;
    check(|| "a21 - a12".to_string(), n[2][0], n[1][1], scale)?;
    check(|| "a31 - a13".to_string(), n[3][0], n[1][2], scale)?;
    check(|| "a32 - a23".to_string(), n[3][1], n[2][2], scale)?;
    Ok(DegenerateSemiInvariants { a, s11: n[1][0], s12: n[1][1], s13: n[1][2], s23: n[2][2], s33: n[3][2] })
}

/// `I1 = s11 s12 / a³` and `I2 = s12² / (a s33)` of the degenerate branch.
pub fn degenerate_invariants<T: Scalar>(s: &DegenerateSemiInvariants<T>) -> (T, T) {
    (s.s11 * s.s12 / Float::powi(s.a, 3), s.s12 * s.s12 / (s.a * s.s33))
}
