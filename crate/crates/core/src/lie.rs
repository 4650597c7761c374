//! `sl(3)` in the basis `u1, u2, u3, e1, …, e5` and the representations used by the classifier.
//!
//! `u1 = E21, u2 = E32, u3 = E31` span the complement of the isotropy algebra, `e1, e2` are the
//! diagonal elements `diag(-1/3, 2/3, -1/3)`, `diag(-1/3, -1/3, 2/3)`, and `e3 = E12`,
//! `e4 = E23`, `e5 = E13`.

use nalgebra::{Matrix3, SMatrix};

use crate::Scalar;

pub type Mat3<T> = Matrix3<T>;
pub type Mat8<T> = SMatrix<T, 8, 8>;
pub type Mat4<T> = SMatrix<T, 4, 4>;

/// Basis element `n` (0-based) as a 3×3 matrix.
pub fn basis<T: Scalar>(n: usize) -> Mat3<T> {
    let mut m = Mat3::<T>::zeros();
    let third = T::one() / T::of(3.0);
    match n {
        0 => m[(1, 0)] = T::one(),
        1 => m[(2, 1)] = T::one(),
        2 => m[(2, 0)] = T::one(),
        3 => {
            m[(0, 0)] = -third;
            m[(1, 1)] = T::of(2.0) * third;
            m[(2, 2)] = -third;
        }
        4 => {
            m[(0, 0)] = -third;
            m[(1, 1)] = -third;
            m[(2, 2)] = T::of(2.0) * third;
        }
        5 => m[(0, 1)] = T::one(),
        6 => m[(1, 2)] = T::one(),
        7 => m[(0, 2)] = T::one(),
        _ => panic!("sl(3) has eight basis elements"),
    }
    m
}

/// Coordinates of a traceless matrix in the basis.
pub fn coordinates<T: Scalar>(m: &Mat3<T>) -> [T; 8] {
    [m[(1, 0)], m[(2, 1)], m[(2, 0)], m[(1, 1)] - m[(0, 0)], m[(2, 2)] - m[(0, 0)], m[(0, 1)], m[(1, 2)], m[(0, 2)]]
}

/// Upper-triangular group element `[[x, t, v], [0, y, u], [0, 0, z]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupElement<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub t: T,
    pub u: T,
    pub v: T,
}

impl<T: Scalar> GroupElement<T> {
    pub fn identity() -> Self {
        GroupElement { x: T::one(), y: T::one(), z: T::one(), t: T::zero(), u: T::zero(), v: T::zero() }
    }

    /// Unipotent element with `x = y = z = 1`.
    pub fn unipotent(t: T, u: T, v: T) -> Self {
        GroupElement { t, u, v, ..Self::identity() }
    }

    pub fn diagonal(x: T, y: T, z: T) -> Self {
        GroupElement { x, y, z, ..Self::identity() }
    }

    pub fn matrix(&self) -> Mat3<T> {
        let o = T::zero();
        Mat3::new(self.x, self.t, self.v, o, self.y, self.u, o, o, self.z)
    }

    pub fn from_matrix(m: &Mat3<T>) -> Self {
        GroupElement { x: m[(0, 0)], y: m[(1, 1)], z: m[(2, 2)], t: m[(0, 1)], u: m[(1, 2)], v: m[(0, 2)] }
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self::from_matrix(&(self.matrix() * o.matrix()))
    }

    /// `Ad(g)` as an 8×8 matrix; column `n` holds the coordinates of `g b_n g⁻¹`.
    pub fn adjoint(&self) -> Mat8<T> {
        let g = self.matrix();
        let gi = g.try_inverse().expect("group element is invertible");
        let mut out = Mat8::<T>::zeros();
        for n in 0..8 {
            let c = coordinates(&(g * basis::<T>(n) * gi));
            for (r, v) in c.iter().enumerate() {
                out[(r, n)] = *v;
            }
        }
        out
    }

    /// Action on `(a, d)`.
    pub fn weights_ad(&self) -> [T; 2] {
        let GroupElement { x, y, z, .. } = *self;
        [x * x * x / (y * y * z), x * y * y / (z * z * z)]
    }

    /// The representation `ρ` on `(a, a1, a2, a3)` used in the degenerate branch.
    pub fn rho(&self) -> Mat4<T> {
        let GroupElement { x, y, z, t, u, v } = *self;
        let (x3, x4) = (x * x * x, x * x * x * x);
        let o = T::zero();
        let f = |n: f64| T::of(n);
        Mat4::new(
            x3 / (y * y * z),
            o,
            o,
            o,
            f(5.0) * x3 * t / (y * y * y * z),
            x4 / (y * y * y * z),
            o,
            o,
            -x3 * u / (y * y * z * z),
            o,
            x3 / (y * z * z),
            o,
            x3 * (f(4.0) * y * v - f(5.0) * u * t) / (y * y * y * z * z),
            -x4 * u / (y * y * y * z * z),
            x3 * t / (y * y * z * z),
            x4 / (y * y * z * z),
        )
    }
}

fn sparse<T: Scalar>(n: usize, diag: &[f64], entries: &[(usize, usize, f64)]) -> Vec<Vec<T>> {
    let mut m = vec![vec![T::zero(); n]; n];
    for (i, d) in diag.iter().enumerate() {
        m[i][i] = T::of(*d);
    }
    for &(r, c, v) in entries {
        m[r][c] = T::of(v);
    }
    m
}

/// Differential of `ρ` at the identity, for `e1 … e5`.
pub fn d_rho<T: Scalar>() -> [Vec<Vec<T>>; 5] {
    [
        sparse(4, &[-2.0, -3.0, -1.0, -2.0], &[]),
        sparse(4, &[-1.0, -1.0, -2.0, -2.0], &[]),
        sparse(4, &[], &[(1, 0, 5.0), (3, 2, 1.0)]),
        sparse(4, &[], &[(2, 0, -1.0), (3, 1, -1.0)]),
        sparse(4, &[], &[(3, 0, 4.0)]),
    ]
}

/// Action of `e1 … e5` on the curvature values `(a, b, c, d)`.
pub fn d_rho_curvature<T: Scalar>() -> [Vec<Vec<T>>; 5] {
    [
        sparse(4, &[-2.0, -1.0, 1.0, 2.0], &[]),
        sparse(4, &[-1.0, -2.0, -3.0, -3.0], &[]),
        sparse(4, &[], &[(2, 3, 1.0)]),
        sparse(4, &[], &[(1, 0, -1.0)]),
        sparse(4, &[], &[]),
    ]
}

/// Structure constants: `[b_i, b_j] = Σ_k c[i][j][k] b_k`.
pub fn structure_constants<T: Scalar>() -> [[[T; 8]; 8]; 8] {
    let mut out = [[[T::zero(); 8]; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            let (a, b) = (basis::<T>(i), basis::<T>(j));
            out[i][j] = coordinates(&(a * b - b * a));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coordinates_invert_basis() {
        for n in 0..8 {
            let c = coordinates(&basis::<f64>(n));
            for (k, v) in c.iter().enumerate() {
                assert_eq!(*v, if k == n { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn adjoint_is_a_homomorphism() {
        let g = GroupElement { x: 1.3, y: 0.7, z: 2.1, t: 0.4, u: -0.9, v: 0.25 };
        let h = GroupElement { x: 0.8, y: 1.9, z: 0.6, t: -1.2, u: 0.3, v: 0.7 };
        let lhs = g.compose(&h).adjoint();
        let rhs = g.adjoint() * h.adjoint();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }

    #[test]
    fn d_rho_matches_rho() {
        let s = 1e-6;
        let dr = d_rho::<f64>();
        for (n, m) in dr.iter().enumerate() {
            let e = basis::<f64>(n + 3);
            let g = GroupElement::from_matrix(&(Mat3::identity() + e * s));
            let r = g.rho();
            for i in 0..4 {
                for j in 0..4 {
                    let id = if i == j { 1.0 } else { 0.0 };
                    assert!(((r[(i, j)] - id) / s - m[i][j]).abs() < 1e-4, "e{} ({i},{j})", n + 1);
                }
            }
        }
    }
}
