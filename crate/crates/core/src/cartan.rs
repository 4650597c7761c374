//! Normal Cartan connection of `y'' = f(x, y, z)` and its curvature.
//!
//! Formulas are written once over [`DiffAlgebra`], so they run both on exact expressions and on
//! truncated Taylor series (see [`crate::jet`]).

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::forms::Form;
use crate::symbolic::{is_zero, Assumptions, Chart, Expr, TriBool};
use crate::Rational;

/// Coordinates of the jet chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coord {
    X,
    Y,
    Z,
}

impl Coord {
    pub fn name(self) -> &'static str {
        match self {
            Coord::X => "x",
            Coord::Y => "y",
            Coord::Z => "z",
        }
    }
}

/// Commutative algebra of functions of `(x, y, z)` closed under partial derivatives.
pub trait DiffAlgebra: Clone {
    fn constant(&self, r: &Rational) -> Self;
    fn coord(&self, c: Coord) -> Self;
    fn partial(&self, c: Coord) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn scaled(&self, r: &Rational) -> Self;

    fn zero_like(&self) -> Self {
        self.constant(&Rational::from_integer(BigInt::from(0)))
    }
}

impl DiffAlgebra for Expr {
    fn constant(&self, r: &Rational) -> Self {
        Expr::rational(r.clone())
    }

    fn coord(&self, c: Coord) -> Self {
        Expr::var(c.name())
    }

    fn partial(&self, c: Coord) -> Self {
        self.diff(c.name())
    }

    fn plus(&self, o: &Self) -> Self {
        self + o
    }

    fn minus(&self, o: &Self) -> Self {
        self - o
    }

    fn times(&self, o: &Self) -> Self {
        self * o
    }

    fn scaled(&self, r: &Rational) -> Self {
        self.scale(r)
    }
}

pub(crate) fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Sum of `coefficient * term` pairs.
pub(crate) fn lincomb<R: DiffAlgebra>(zero: &R, terms: &[(Rational, R)]) -> R {
    let mut acc = zero.clone();
    for (c, t) in terms {
        acc = acc.plus(&t.scaled(c));
    }
    acc
}

/// Memoized partial derivatives `∂^(i+j+k) f / ∂x^i ∂y^j ∂z^k`.
pub struct Derivatives<R> {
    f: R,
    cache: HashMap<(u8, u8, u8), R>,
}

impl<R: DiffAlgebra> Derivatives<R> {
    pub fn new(f: R) -> Self {
        let mut cache = HashMap::new();
        cache.insert((0, 0, 0), f.clone());
        Derivatives { f, cache }
    }

    pub fn f(&self) -> &R {
        &self.f
    }

    pub fn get(&mut self, ix: u8, iy: u8, iz: u8) -> R {
        if let Some(v) = self.cache.get(&(ix, iy, iz)) {
            return v.clone();
        }
        let v = if iz > 0 {
            self.get(ix, iy, iz - 1).partial(Coord::Z)
        } else if iy > 0 {
            self.get(ix, iy - 1, 0).partial(Coord::Y)
        } else {
            self.get(ix - 1, 0, 0).partial(Coord::X)
        };
        self.cache.insert((ix, iy, iz), v.clone());
        v
    }

    /// `D` applied to the cached derivative `(ix, iy, iz)`.
    pub fn total_of(&mut self, ix: u8, iy: u8, iz: u8) -> R {
        let gx = self.get(ix + 1, iy, iz);
        let gy = self.get(ix, iy + 1, iz);
        let gz = self.get(ix, iy, iz + 1);
        let z = self.f.coord(Coord::Z);
        gx.plus(&z.times(&gy)).plus(&self.f.times(&gz))
    }

    /// `D g = g_x + z g_y + f g_z` for an arbitrary function `g`.
    pub fn total(&self, g: &R) -> R {
        let z = self.f.coord(Coord::Z);
        g.partial(Coord::X).plus(&z.times(&g.partial(Coord::Y))).plus(&self.f.times(&g.partial(Coord::Z)))
    }
}

/// The curvature scalars `a, b, c, d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurvatureScalars<R = Expr> {
    pub a: R,
    pub b: R,
    pub c: R,
    pub d: R,
}

/// The 16-term expression for `a`.
pub fn scalar_a<R: DiffAlgebra>(dv: &mut Derivatives<R>) -> R {
    let f = dv.f().clone();
    let z = f.coord(Coord::Z);
    let z2 = z.times(&z);
    let g = |dv: &mut Derivatives<R>, i, j, k| dv.get(i, j, k);
    let terms = vec![
        (q(-1, 1), g(dv, 0, 2, 0)),
        (q(1, 2), f.times(&g(dv, 0, 1, 2))),
        (q(1, 2), g(dv, 0, 1, 0).times(&g(dv, 0, 0, 2))),
        (q(2, 3), g(dv, 1, 1, 1)),
        (q(-1, 6), g(dv, 2, 0, 2)),
        (q(-1, 3), z.times(&g(dv, 1, 1, 2))),
        (q(-1, 6), g(dv, 1, 0, 0).times(&g(dv, 0, 0, 3))),
        (q(-1, 3), f.times(&g(dv, 1, 0, 3))),
        (q(2, 3), z.times(&g(dv, 0, 2, 1))),
        (q(-1, 6), z2.times(&g(dv, 0, 2, 2))),
        (q(-1, 6), z.times(&g(dv, 0, 1, 0)).times(&g(dv, 0, 0, 3))),
        (q(-1, 3), z.times(&f).times(&g(dv, 0, 1, 3))),
        (q(-2, 3), g(dv, 0, 0, 1).times(&g(dv, 0, 1, 1))),
        (q(1, 6), g(dv, 0, 0, 1).times(&g(dv, 1, 0, 2))),
        (q(1, 6), z.times(&g(dv, 0, 0, 1)).times(&g(dv, 0, 1, 2))),
        (q(-1, 6), f.times(&f).times(&g(dv, 0, 0, 4))),
    ];
    lincomb(&f.zero_like(), &terms)
}

/// `d = -f_zzzz / 6`.
pub fn scalar_d<R: DiffAlgebra>(dv: &mut Derivatives<R>) -> R {
    dv.get(0, 0, 4).scaled(&q(-1, 6))
}

/// All four scalars; `b = ∂a/∂z`, `c = -D d - 2 f_z d`.
pub fn scalars_in<R: DiffAlgebra>(dv: &mut Derivatives<R>) -> CurvatureScalars<R> {
    let a = scalar_a(dv);
    let d = scalar_d(dv);
    let b = a.partial(Coord::Z);
    let dd = dv.total(&d);
    let fz = dv.get(0, 0, 1);
    let c = dd.plus(&fz.times(&d).scaled(&q(2, 1))).scaled(&q(-1, 1));
    CurvatureScalars { a, b, c, d }
}

/// `ω^(i)(X̃_k)`: rows are the components paired with `e1..e5`
/// (`ω22-ω11, ω33-ω11, ω12, ω23, ω13`), columns the frame `(d/dx, ∂/∂z, ∂/∂y)`.
pub fn connection_values<R: DiffAlgebra>(dv: &mut Derivatives<R>) -> [[R; 3]; 5] {
    let zero = dv.f().zero_like();
    let fy = dv.get(0, 1, 0);
    let fz = dv.get(0, 0, 1);
    let fzz = dv.get(0, 0, 2);
    let fyz = dv.get(0, 1, 1);
    let fzzz = dv.get(0, 0, 3);
    let d_fzz = dv.total_of(0, 0, 2);
    let d_fzzz = dv.total_of(0, 0, 3);
    let lambda = lincomb(&zero, &[(q(2, 3), fyz.clone()), (q(-1, 6), d_fzz.clone())]);
    let e5_x = lincomb(&zero, &[(q(1, 3), fyz), (q(-1, 3), d_fzz)]);
    let e5_y = lincomb(&zero, &[(q(-1, 6), fz.times(&fzzz)), (q(-1, 6), d_fzzz)]);
    [
        [fz, zero.clone(), zero.clone()],
        [zero.clone(), zero.clone(), fzz.scaled(&q(-1, 2))],
        [fy, fzz.scaled(&q(1, 2)), lambda],
        [zero.clone(), zero.clone(), fzzz.scaled(&q(1, 6))],
        [e5_x, fzzz.scaled(&q(-1, 6)), e5_y],
    ]
}

/// Constant square matrix of rationals describing how a basis element acts on a vector.
pub type RMat = Vec<Vec<Rational>>;

pub fn rmat(rows: &[&[i64]]) -> RMat {
    rows.iter().map(|r| r.iter().map(|v| Rational::from_integer(BigInt::from(*v))).collect()).collect()
}

pub(crate) fn rmat_apply<R: DiffAlgebra>(m: &RMat, v: &[R]) -> Vec<R> {
    let zero = v[0].zero_like();
    m.iter()
        .map(|row| {
            let mut acc = zero.clone();
            for (c, x) in row.iter().zip(v) {
                if !num_traits::Zero::is_zero(c) {
                    acc = acc.plus(&x.scaled(c));
                }
            }
            acc
        })
        .collect()
}

/// Applies the frame `(d/dx, ∂/∂z, ∂/∂y)` to a function.
pub fn frame_derivative<R: DiffAlgebra>(dv: &Derivatives<R>, k: usize, g: &R) -> R {
    match k {
        0 => dv.total(g),
        1 => g.partial(Coord::Z),
        2 => g.partial(Coord::Y),
        _ => panic!("frame index out of range"),
    }
}

/// `F_k = X̃_k F + Σ_i ω^(i)(X̃_k) (e_i · F)` for `k = 1, 2, 3`.
pub fn covariant_derivative_in<R: DiffAlgebra>(
    dv: &Derivatives<R>,
    conn: &[[R; 3]; 5],
    value: &[R],
    actions: &[RMat; 5],
) -> [Vec<R>; 3] {
    let acted: Vec<Vec<R>> = actions.iter().map(|m| rmat_apply(m, value)).collect();
    std::array::from_fn(|k| {
        value
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let mut acc = frame_derivative(dv, k, v);
                for i in 0..5 {
                    acc = acc.plus(&conn[i][k].times(&acted[i][j]));
                }
                acc
            })
            .collect()
    })
}

/// Action of `e1..e5` on the pair `(a, d)`.
pub fn ad_actions() -> [RMat; 5] {
    [
        rmat(&[&[-2, 0], &[0, 2]]),
        rmat(&[&[-1, 0], &[0, -3]]),
        rmat(&[&[0, 0], &[0, 0]]),
        rmat(&[&[0, 0], &[0, 0]]),
        rmat(&[&[0, 0], &[0, 0]]),
    ]
}

/// The 2×5 matrix `(F1 F2 F3 | e-columns)` of first derivatives of `(a, d)`.
pub fn f1_in<R: DiffAlgebra>(dv: &mut Derivatives<R>, a: &R, d: &R) -> [[R; 5]; 2] {
    let conn = connection_values(dv);
    let cols = covariant_derivative_in(dv, &conn, &[a.clone(), d.clone()], &ad_actions());
    [
        [cols[0][0].clone(), cols[1][0].clone(), cols[2][0].clone(), a.scaled(&q(2, 1)), a.clone()],
        [cols[0][1].clone(), cols[1][1].clone(), cols[2][1].clone(), d.scaled(&q(-2, 1)), d.scaled(&q(3, 1))],
    ]
}

// ----- expression-level API -------------------------------------------------------------------

/// Coefficients of a 1-form in the coframe `θ1 = dx, θ2 = dy - z dx, θ3 = dz - f dx`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneForm {
    pub c: [Expr; 3],
}

impl OneForm {
    pub fn new(c1: Expr, c2: Expr, c3: Expr) -> Self {
        OneForm { c: [c1, c2, c3] }
    }

    pub fn zero() -> Self {
        OneForm::new(Expr::zero(), Expr::zero(), Expr::zero())
    }

    /// Value on the frame vector `X̃_k` of `(d/dx, ∂/∂z, ∂/∂y)`, dual to `(θ1, θ3, θ2)`.
    pub fn on_frame(&self, k: usize) -> &Expr {
        match k {
            0 => &self.c[0],
            1 => &self.c[2],
            2 => &self.c[1],
            _ => panic!("frame index out of range"),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|e| e.is_zero_const())
    }

    /// Coefficients with respect to `(dx, dy, dz)`.
    pub fn to_coordinates(&self, f: &Expr) -> Form {
        let [c1, c2, c3] = &self.c;
        Form::one_form(&[c1 - Expr::z() * c2 - f * c3, c2.clone(), c3.clone()])
    }

    pub fn sub(&self, o: &OneForm) -> OneForm {
        OneForm::new(&self.c[0] - &o.c[0], &self.c[1] - &o.c[1], &self.c[2] - &o.c[2])
    }
}

/// A 2-form written in the basis `θ1∧θ2, θ1∧θ3, θ2∧θ3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwoForm {
    pub t12: Expr,
    pub t13: Expr,
    pub t23: Expr,
}

impl TwoForm {
    fn from_coordinates(form: &Form, f: &Expr) -> Self {
        let xy = form.coeff(&[0, 1]);
        let xz = form.coeff(&[0, 2]);
        let yz = form.coeff(&[1, 2]);
        TwoForm { t12: &xy - f * &yz, t13: &xz + Expr::z() * &yz, t23: yz }
    }
}

/// The nine entries `ω̃_ij` of the normal connection together with the chosen `μ`.
#[derive(Clone, Debug)]
pub struct ConnectionForm {
    pub f: Expr,
    pub entries: [[OneForm; 3]; 3],
    pub mu: Expr,
}

impl ConnectionForm {
    pub fn entry(&self, i: usize, j: usize) -> &OneForm {
        &self.entries[i - 1][j - 1]
    }

    /// The five components paired with `e1..e5`.
    pub fn components(&self) -> [OneForm; 5] {
        [
            self.entry(2, 2).sub(self.entry(1, 1)),
            self.entry(3, 3).sub(self.entry(1, 1)),
            self.entry(1, 2).clone(),
            self.entry(2, 3).clone(),
            self.entry(1, 3).clone(),
        ]
    }

    /// `Ω = dω + ω∧ω`, each entry expressed in the θ-basis.
    pub fn curvature(&self) -> [[TwoForm; 3]; 3] {
        let chart = Chart::default();
        let coords: Vec<Vec<Form>> =
            (0..3).map(|i| (0..3).map(|j| self.entries[i][j].to_coordinates(&self.f)).collect()).collect();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut omega = coords[i][j].d(&chart);
                for k in 0..3 {
                    omega = omega.add(&coords[i][k].wedge(&coords[k][j]));
                }
                TwoForm::from_coordinates(&omega, &self.f)
            })
        })
    }
}

/// The normal connection of `y'' = f`.
pub fn connection_matrix(f: &Expr) -> ConnectionForm {
    let mut dv = Derivatives::new(f.clone());
    let zero = Expr::zero;
    let fz = dv.get(0, 0, 1);
    let fzz = dv.get(0, 0, 2);
    let fy = dv.get(0, 1, 0);
    let fyz = dv.get(0, 1, 1);
    let fyzz = dv.get(0, 1, 2);
    let fzzz = dv.get(0, 0, 3);
    let d_fzz = dv.total_of(0, 0, 2);
    let d_fzzz = dv.total_of(0, 0, 3);
    let mu = fyzz.scale(&q(1, 6)) - (&fz * &fzzz).scale(&q(1, 6)) - d_fzzz.scale(&q(1, 6));
    let w11 = OneForm::new(fz.scale(&q(-1, 3)), fzz.scale(&q(1, 6)), zero());
    let w22 = OneForm::new(fz.scale(&q(2, 3)), fzz.scale(&q(1, 6)), zero());
    let w33 = OneForm::new(fz.scale(&q(-1, 3)), fzz.scale(&q(-1, 3)), zero());
    let lambda = fyz.scale(&q(2, 3)) - d_fzz.scale(&q(1, 6));
    let w12 = OneForm::new(fy, lambda, fzz.scale(&q(1, 2)));
    // (1/3 f_yz - 1/6 D f_zz) dx - 1/6 d(f_zz) + μ θ2, with d(f_zz) = D f_zz θ1 + f_yzz θ2 + f_zzz θ3
    let w13 =
        OneForm::new(fyz.scale(&q(1, 3)) - d_fzz.scale(&q(1, 3)), &mu - fyzz.scale(&q(1, 6)), fzzz.scale(&q(-1, 6)));
    let w23 = OneForm::new(zero(), fzzz.scale(&q(1, 6)), zero());
    let w21 = OneForm::new(Expr::one(), zero(), zero());
    let w31 = OneForm::new(zero(), Expr::one(), zero());
    let w32 = OneForm::new(zero(), zero(), Expr::one());
    ConnectionForm { f: f.clone(), entries: [[w11, w12, w13], [w21, w22, w23], [w31, w32, w33]], mu }
}

/// The scalars `a, b, c, d` of `y'' = f`.
pub fn curvature_scalars(f: &Expr) -> CurvatureScalars {
    scalars_in(&mut Derivatives::new(f.clone()))
}

/// Three-valued flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    True,
    False,
    Undecided,
}

impl Decision {
    pub fn and(self, o: Decision) -> Decision {
        match (self, o) {
            (Decision::False, _) | (_, Decision::False) => Decision::False,
            (Decision::True, Decision::True) => Decision::True,
            _ => Decision::Undecided,
        }
    }

    pub fn from_zero(t: TriBool) -> Decision {
        match t {
            TriBool::Zero => Decision::True,
            TriBool::NonZero => Decision::False,
            TriBool::Unknown => Decision::Undecided,
        }
    }

    pub fn is_true(self) -> bool {
        self == Decision::True
    }
}

/// Cubic / dual-cubic / linearizable flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CartanFlags {
    pub is_cubic: Decision,
    pub is_dual_cubic: Decision,
    pub is_linearizable: Decision,
}

/// Zero-test verdicts of the four scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarVanishing {
    pub a: TriBool,
    pub b: TriBool,
    pub c: TriBool,
    pub d: TriBool,
}

impl ScalarVanishing {
    pub fn of(s: &CurvatureScalars, a: &Assumptions) -> Self {
        ScalarVanishing { a: is_zero(&s.a, a), b: is_zero(&s.b, a), c: is_zero(&s.c, a), d: is_zero(&s.d, a) }
    }

    pub fn flags(&self) -> CartanFlags {
        let is_cubic = Decision::from_zero(self.c).and(Decision::from_zero(self.d));
        let is_dual_cubic = Decision::from_zero(self.a).and(Decision::from_zero(self.b));
        CartanFlags { is_cubic, is_dual_cubic, is_linearizable: is_cubic.and(is_dual_cubic) }
    }
}

pub fn classify_flags(f: &Expr, a: &Assumptions) -> CartanFlags {
    ScalarVanishing::of(&curvature_scalars(f), a).flags()
}

/// A vector-valued function together with the action of `e1..e5` on its values.
#[derive(Clone, Debug)]
pub struct EquivariantFunction {
    pub value: Vec<Expr>,
    pub actions: [RMat; 5],
}

/// Horizontal covariant derivatives `(F1, F2, F3)` of an equivariant function.
pub fn covariant_derivative(func: &EquivariantFunction, conn: &ConnectionForm, f: &Expr) -> [Vec<Expr>; 3] {
    let dv = Derivatives::new(f.clone());
    let comps = conn.components();
    let values: [[Expr; 3]; 5] = std::array::from_fn(|i| std::array::from_fn(|k| comps[i].on_frame(k).clone()));
    covariant_derivative_in(&dv, &values, &func.value, &func.actions)
}

/// The 2×5 derivative matrix of `(a, d)`.
pub fn f1_matrix(f: &Expr) -> [[Expr; 5]; 2] {
    let mut dv = Derivatives::new(f.clone());
    let a = scalar_a(&mut dv);
    let d = scalar_d(&mut dv);
    f1_in(&mut dv, &a, &d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_default;

    #[test]
    fn flat_connection() {
        let c = connection_matrix(&Expr::zero());
        assert_eq!(c.entry(2, 1), &OneForm::new(Expr::one(), Expr::zero(), Expr::zero()));
        assert_eq!(c.entry(3, 1), &OneForm::new(Expr::zero(), Expr::one(), Expr::zero()));
        assert_eq!(c.entry(3, 2), &OneForm::new(Expr::zero(), Expr::zero(), Expr::one()));
        for (i, j) in [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)] {
            assert!(c.entry(i, j).is_zero());
        }
    }

    #[test]
    fn exponential_scalars() {
        let s = curvature_scalars(&parse_default("exp(-z)").unwrap());
        assert_eq!(s.a, parse_default("-1/6*exp(-3*z)").unwrap());
        assert_eq!(s.d, parse_default("-1/6*exp(-z)").unwrap());
        assert_eq!(s.b, parse_default("1/2*exp(-3*z)").unwrap());
        assert_eq!(s.c, parse_default("-1/2*exp(-2*z)").unwrap());
    }
}

#[cfg(test)]
mod curvature_tests {
    use super::*;
    use crate::symbolic::parse_default;

    fn check_structure(src: &str) {
        let f = parse_default(src).unwrap();
        let conn = connection_matrix(&f);
        let s = curvature_scalars(&f);
        let om = conn.curvature();
        let asm = Assumptions::new();
        let expect = |i: usize, j: usize| -> (Expr, Expr, Expr) {
            match (i, j) {
                (0, 1) => (s.a.clone(), Expr::zero(), Expr::zero()),
                (1, 2) => (Expr::zero(), Expr::zero(), s.d.clone()),
                (0, 2) => (s.b.clone(), Expr::zero(), s.c.clone()),
                _ => (Expr::zero(), Expr::zero(), Expr::zero()),
            }
        };
        for i in 0..3 {
            for j in 0..3 {
                let (e12, e13, e23) = expect(i, j);
                let w = &om[i][j];
                for (got, want) in [(&w.t12, e12), (&w.t13, e13), (&w.t23, e23)] {
                    assert_eq!(is_zero(&(got - &want), &asm), TriBool::Zero, "{src}: entry ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn curvature_has_normal_form() {
        check_structure("x*z^3 + y^2*z + exp(x)*z^4");
        check_structure("y*exp(z) + x^2");
    }
}
