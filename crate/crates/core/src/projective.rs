//! Projective connections of equations cubic in `y'` and developments of plane curves.

use nalgebra::{Matrix3, Vector3};
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::symbolic::{CubicForm, EvalError, Expr, Point};
use crate::Scalar;

/// `α dx + β dy` on the plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneForm {
    pub dx: Expr,
    pub dy: Expr,
}

impl PlaneForm {
    pub fn new(dx: Expr, dy: Expr) -> Self {
        PlaneForm { dx, dy }
    }

    pub fn zero() -> Self {
        PlaneForm::new(Expr::zero(), Expr::zero())
    }

    /// Value on the tangent vector `(u, v)` at `(x, y)`.
    pub fn eval_on<T: Scalar>(&self, at: &Point<T>, u: T, v: T) -> Result<T, EvalError> {
        Ok(self.dx.eval(at)?.value * u + self.dy.eval(at)?.value * v)
    }

    fn neg(&self) -> PlaneForm {
        PlaneForm::new(-&self.dx, -&self.dy)
    }
}

/// Projective connection normalized by `ω¹ = dx`, `ω² = dy` and `ω¹₁ + ω²₂ = 0`.
///
/// Field `wij` holds `ωⁱⱼ`; `w1`, `w2` are the forms in the top row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveConn {
    pub w11: PlaneForm,
    pub w12: PlaneForm,
    pub w21: PlaneForm,
    pub w1: PlaneForm,
    pub w2: PlaneForm,
}

impl ProjectiveConn {
    pub fn w22(&self) -> PlaneForm {
        self.w11.neg()
    }

    /// The 3×3 matrix `ω(u ∂x + v ∂y)` at a point.
    pub fn matrix_on<T: Scalar>(&self, at: &Point<T>, u: T, v: T) -> Result<Matrix3<T>, EvalError> {
        let w11 = self.w11.eval_on(at, u, v)?;
        Ok(Matrix3::new(
            T::zero(),
            self.w1.eval_on(at, u, v)?,
            self.w2.eval_on(at, u, v)?,
            u,
            w11,
            self.w12.eval_on(at, u, v)?,
            v,
            self.w21.eval_on(at, u, v)?,
            -w11,
        ))
    }
}

fn third(e: &Expr) -> Expr {
    e / Expr::int(3)
}

/// The normal projective connection whose geodesics are the solutions of `y'' = A z³ + B z² + C z + D`.
pub fn build_projective_connection(c: &CubicForm) -> ProjectiveConn {
    let (a, b, cc, d) = (&c.a, &c.b, &c.c, &c.d);
    let k = |n: i64, m: i64| Expr::frac(n, m);
    let w11 = PlaneForm::new(third(cc), third(b));
    let w12 = PlaneForm::new(third(b), a.clone());
    let w21 = PlaneForm::new(-d, -third(cc));
    let mixed = third(&cc.diff("y")) - third(&b.diff("x")) + k(1, 9) * b * cc - a * d;
    let w1 = PlaneForm::new(d.diff("y") - third(&cc.diff("x")) - k(2, 3) * b * d + k(2, 9) * cc * cc, mixed.clone());
    let w2 = PlaneForm::new(mixed, third(&b.diff("y")) - a.diff("x") + k(2, 9) * b * b - k(2, 3) * a * cc);
    ProjectiveConn { w11, w12, w21, w1, w2 }
}

/// Coefficients of the geodesic equation `y'' = β¹₂ z³ + (2β¹₁ + α¹₂) z² + (2α¹₁ − β²₁) z − α²₁`
/// with `ωⁱⱼ = αⁱⱼ dx + βⁱⱼ dy`.
pub fn geodesic_equation(conn: &ProjectiveConn) -> CubicForm {
    let two = Expr::int(2);
    CubicForm::new(
        conn.w12.dy.clone(),
        &two * &conn.w11.dy + &conn.w12.dx,
        &two * &conn.w11.dx - &conn.w21.dy,
        -&conn.w21.dx,
    )
}

/// A curve `t ↦ (x(t), y(t))`.
#[derive(Clone, Debug, PartialEq)]
pub enum PlaneCurve {
    /// Expressions in the variable `t`.
    Closed { x: Expr, y: Expr },
    /// Positions and velocities on a uniform grid.
    Sampled(Vec<CurveSample>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub xd: f64,
    pub yd: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ProjectiveError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("det h drifted to {det} at t = {t}; reduce the step")]
    Drift { t: f64, det: f64 },
    #[error("curve is not a graph over x at t = {0}")]
    NotAGraph(f64),
    #[error("{0}")]
    Input(String),
}

/// Position and velocity of the curve at `t`.
pub type CurveState<T> = [T; 4];

impl PlaneCurve {
    /// Samples with velocities from central differences (one-sided at the ends).
    pub fn from_positions(rows: &[(f64, f64, f64)]) -> Result<PlaneCurve, ProjectiveError> {
        if rows.len() < 3 {
            return Err(ProjectiveError::Input("a sampled curve needs at least three rows".into()));
        }
        if rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ProjectiveError::Input("sample times must increase strictly".into()));
        }
        let n = rows.len();
        let out = (0..n)
            .map(|i| {
                let (lo, hi) = if i == 0 {
                    (0, 1)
                } else if i == n - 1 {
                    (n - 2, n - 1)
                } else {
                    (i - 1, i + 1)
                };
                let dt = rows[hi].0 - rows[lo].0;
                let (t, x, y) = rows[i];
                CurveSample { t, x, y, xd: (rows[hi].1 - rows[lo].1) / dt, yd: (rows[hi].2 - rows[lo].2) / dt }
            })
            .collect();
        Ok(PlaneCurve::Sampled(out))
    }

    /// `(x, y, ẋ, ẏ)` at `t`. Sampled curves use cubic Hermite interpolation.
    pub fn state<T: Scalar>(&self, t: T) -> Result<CurveState<T>, ProjectiveError> {
        match self {
            PlaneCurve::Closed { x, y } => {
                let p = Point::new().with("t", t);
                Ok([x.eval(&p)?.value, y.eval(&p)?.value, x.diff("t").eval(&p)?.value, y.diff("t").eval(&p)?.value])
            }
            PlaneCurve::Sampled(s) => {
                let tf = t.to_f64();
                let i = s.partition_point(|c| c.t <= tf).clamp(1, s.len() - 1) - 1;
                let (p, q) = (&s[i], &s[i + 1]);
                let h = q.t - p.t;
                let u = (tf - p.t) / h;
                let (h00, h10, h01, h11) = (
                    2.0 * u.powi(3) - 3.0 * u * u + 1.0,
                    u.powi(3) - 2.0 * u * u + u,
                    -2.0 * u.powi(3) + 3.0 * u * u,
                    u.powi(3) - u * u,
                );
                let (d00, d10, d01, d11) =
                    (6.0 * u * u - 6.0 * u, 3.0 * u * u - 4.0 * u + 1.0, -6.0 * u * u + 6.0 * u, 3.0 * u * u - 2.0 * u);
                let pos = |a: f64, da: f64, b: f64, db: f64| h00 * a + h10 * h * da + h01 * b + h11 * h * db;
                let vel = |a: f64, da: f64, b: f64, db: f64| (d00 * a + d01 * b) / h + d10 * da + d11 * db;
                Ok([
                    T::of(pos(p.x, p.xd, q.x, q.xd)),
                    T::of(pos(p.y, p.yd, q.y, q.yd)),
                    T::of(vel(p.x, p.xd, q.x, q.xd)),
                    T::of(vel(p.y, p.yd, q.y, q.yd)),
                ])
            }
        }
    }

    /// Parameter range covered by the curve, if bounded.
    pub fn span(&self) -> Option<(f64, f64)> {
        match self {
            PlaneCurve::Closed { .. } => None,
            PlaneCurve::Sampled(s) => Some((s.first()?.t, s.last()?.t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DevelopedCurve<T: Scalar> {
    pub times: Vec<T>,
    /// `h(t)`.
    pub frames: Vec<Matrix3<T>>,
    /// `h(t) [1 : 0 : 0]` normalized to unit length with first nonzero coordinate positive.
    pub points: Vec<Vector3<T>>,
}

/// Unit representative with first nonzero coordinate positive.
pub fn normalize_homogeneous<T: Scalar>(p: &Vector3<T>) -> Vector3<T> {
    let n = p.norm();
    let mut q = p / n;
    if let Some(first) = q.iter().copied().find(|v| !v.is_zero()) {
        if first < T::zero() {
            q = -q;
        }
    }
    q
}

/// `det [p q r]` of unit representatives.
pub fn collinearity<T: Scalar>(p: &Vector3<T>, q: &Vector3<T>, r: &Vector3<T>) -> T {
    Matrix3::from_columns(&[normalize_homogeneous(p), normalize_homogeneous(q), normalize_homogeneous(r)]).determinant()
}

/// Largest `|det|` over all triples of developed points.
pub fn max_collinearity<T: Scalar>(points: &[Vector3<T>]) -> T {
    let mut worst = T::zero();
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                worst = Float::max(worst, Float::abs(collinearity(&points[i], &points[j], &points[k])));
            }
        }
    }
    worst
}

/// Allowed drift of `det h` from 1 before a step is rejected.
pub const DET_DRIFT: f64 = 1e-6;

fn x_matrix<T: Scalar>(conn: &ProjectiveConn, s: &CurveState<T>) -> Result<Matrix3<T>, EvalError> {
    let at = Point::new().with("x", s[0]).with("y", s[1]);
    conn.matrix_on(&at, s[2], s[3])
}

fn check_det<T: Scalar>(h: &Matrix3<T>, t: T) -> Result<(), ProjectiveError> {
    let det = h.determinant();
    if Float::abs(det - T::one()).to_f64() > DET_DRIFT || !Float::is_finite(det) {
        return Err(ProjectiveError::Drift { t: t.to_f64(), det: det.to_f64() });
    }
    Ok(())
}

fn origin<T: Scalar>(h: &Matrix3<T>) -> Vector3<T> {
    normalize_homogeneous(&h.column(0).into_owned())
}

/// Integrates `ḣ = h X(t)` with `X(t) = ω(ẋ(t))` by classical RK4 from `h(t0) = I`.
pub fn develop_curve<T: Scalar>(
    conn: &ProjectiveConn,
    curve: &PlaneCurve,
    t0: T,
    t1: T,
    step: T,
) -> Result<DevelopedCurve<T>, ProjectiveError> {
    let n = Float::ceil((t1 - t0) / step).to_f64().max(1.0) as usize;
    let dt = (t1 - t0) / T::of(n as f64);
    let half = dt / T::of(2.0);
    let mut h = Matrix3::<T>::identity();
    let mut out = DevelopedCurve { times: vec![t0], frames: vec![h], points: vec![origin(&h)] };
    let xm = |t: T| -> Result<Matrix3<T>, ProjectiveError> { Ok(x_matrix(conn, &curve.state(t)?)?) };
    for i in 0..n {
        let t = t0 + dt * T::of(i as f64);
        let (xa, xb, xc) = (xm(t)?, xm(t + half)?, xm(t + dt)?);
        let k1 = h * xa;
        let k2 = (h + k1 * half) * xb;
        let k3 = (h + k2 * half) * xb;
        let k4 = (h + k3 * dt) * xc;
        h += (k1 + (k2 + k3) * T::of(2.0) + k4) * (dt / T::of(6.0));
        check_det(&h, t + dt)?;
        out.times.push(t + dt);
        out.frames.push(h);
        out.points.push(origin(&h));
    }
    Ok(out)
}

/// Solution of `y'' = A z³ + B z² + C z + D` from `(x0, y0, z0)` by RK4, as a curve parametrized by `x`.
pub fn solve_geodesic(c: &CubicForm, start: [f64; 3], x_end: f64, step: f64) -> Result<PlaneCurve, ProjectiveError> {
    let rhs = c.rhs();
    let f = |x: f64, y: f64, z: f64| -> Result<f64, EvalError> { rhs.eval_f64(&[("x", x), ("y", y), ("z", z)]) };
    let n = ((x_end - start[0]) / step).abs().ceil().max(1.0) as usize;
    let h = (x_end - start[0]) / n as f64;
    let [mut x, mut y, mut z] = start;
    let mut out = vec![CurveSample { t: x, x, y, xd: 1.0, yd: z }];
    for _ in 0..n {
        let (k1y, k1z) = (z, f(x, y, z)?);
        let (k2y, k2z) = (z + h / 2.0 * k1z, f(x + h / 2.0, y + h / 2.0 * k1y, z + h / 2.0 * k1z)?);
        let (k3y, k3z) = (z + h / 2.0 * k2z, f(x + h / 2.0, y + h / 2.0 * k2y, z + h / 2.0 * k2z)?);
        let (k4y, k4z) = (z + h * k3z, f(x + h, y + h * k3y, z + h * k3z)?);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        z += h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        x += h;
        out.push(CurveSample { t: x, x, y, xd: 1.0, yd: z });
    }
    Ok(PlaneCurve::Sampled(out))
}

/// Geodesic of `conn` through `(x0, y0)` with slope `z0`, developed along the way. The geodesic
/// and the frame are integrated as one RK4 system so the development keeps fourth order.
pub fn develop_geodesic(
    conn: &ProjectiveConn,
    start: [f64; 3],
    x_end: f64,
    step: f64,
) -> Result<DevelopedCurve<f64>, ProjectiveError> {
    let rhs = geodesic_equation(conn).rhs();
    let n = ((x_end - start[0]) / step).abs().ceil().max(1.0) as usize;
    let dt = (x_end - start[0]) / n as f64;
    type State = (f64, f64, Matrix3<f64>);
    let deriv = |x: f64, s: &State| -> Result<State, ProjectiveError> {
        let zz = rhs.eval_f64(&[("x", x), ("y", s.0), ("z", s.1)])?;
        let xm = x_matrix(conn, &[x, s.0, 1.0, s.1])?;
        Ok((s.1, zz, s.2 * xm))
    };
    let add = |s: &State, k: &State, c: f64| (s.0 + c * k.0, s.1 + c * k.1, s.2 + k.2 * c);
    let mut x = start[0];
    let mut s: State = (start[1], start[2], Matrix3::identity());
    let mut out = DevelopedCurve { times: vec![x], frames: vec![s.2], points: vec![origin(&s.2)] };
    for _ in 0..n {
        let k1 = deriv(x, &s)?;
        let k2 = deriv(x + dt / 2.0, &add(&s, &k1, dt / 2.0))?;
        let k3 = deriv(x + dt / 2.0, &add(&s, &k2, dt / 2.0))?;
        let k4 = deriv(x + dt, &add(&s, &k3, dt))?;
        s = (
            s.0 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            s.1 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
            s.2 + (k1.2 + (k2.2 + k3.2) * 2.0 + k4.2) * (dt / 6.0),
        );
        x += dt;
        check_det(&s.2, x)?;
        out.times.push(x);
        out.frames.push(s.2);
        out.points.push(origin(&s.2));
    }
    Ok(out)
}

/// Whether the curve solves the geodesic equation along `[t0, t1]` to `tol` in max norm.
pub fn is_geodesic(
    conn: &ProjectiveConn,
    curve: &PlaneCurve,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<bool, ProjectiveError> {
    Ok(geodesic_residual(conn, curve, t0, t1)? < tol)
}

/// Max over the grid of `|y'' − (A z³ + B z² + C z + D)|` with `'` the derivative in `x`.
pub fn geodesic_residual(conn: &ProjectiveConn, curve: &PlaneCurve, t0: f64, t1: f64) -> Result<f64, ProjectiveError> {
    let rhs = geodesic_equation(conn).rhs();
    let mut worst = 0.0f64;
    let mut check = |x: f64, y: f64, z: f64, yxx: f64| -> Result<(), ProjectiveError> {
        let r = rhs.eval_f64(&[("x", x), ("y", y), ("z", z)])?;
        worst = worst.max((yxx - r).abs());
        Ok(())
    };
    match curve {
        PlaneCurve::Closed { x, y } => {
            let (xd, yd) = (x.diff("t"), y.diff("t"));
            let (xdd, ydd) = (xd.diff("t"), yd.diff("t"));
            let steps = 200;
            for i in 0..=steps {
                let t = t0 + (t1 - t0) * i as f64 / steps as f64;
                let ev = |e: &Expr| e.eval_f64(&[("t", t)]);
                let (u, v, uu, vv) = (ev(&xd)?, ev(&yd)?, ev(&xdd)?, ev(&ydd)?);
                if u.abs() < 1e-12 {
                    return Err(ProjectiveError::NotAGraph(t));
                }
                check(ev(x)?, ev(y)?, v / u, (vv * u - v * uu) / u.powi(3))?;
            }
        }
        PlaneCurve::Sampled(s) => {
            let inside: Vec<usize> = (1..s.len().saturating_sub(1)).filter(|&i| s[i].t >= t0 && s[i].t <= t1).collect();
            for i in inside {
                let (p, c, q) = (&s[i - 1], &s[i], &s[i + 1]);
                if c.xd.abs() < 1e-12 {
                    return Err(ProjectiveError::NotAGraph(c.t));
                }
                let slope = |c: &CurveSample| c.yd / c.xd;
                let yxx = (slope(q) - slope(p)) / (q.t - p.t) / c.xd;
                check(c.x, c.y, slope(c), yxx)?;
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{is_zero, parse, Assumptions, Chart, TriBool};

    fn p(s: &str) -> Expr {
        parse(s, &Chart::new(&["x", "y", "t"])).unwrap()
    }

    fn flat() -> ProjectiveConn {
        build_projective_connection(&CubicForm::from_constants(0.0, 0.0, 0.0, 0.0))
    }

    #[test]
    fn flat_connection_vanishes() {
        let c = flat();
        for f in [&c.w11, &c.w12, &c.w21, &c.w1, &c.w2] {
            assert!(f.dx.is_zero_const() && f.dy.is_zero_const());
        }
    }

    #[test]
    fn pure_cubic_term() {
        let c = build_projective_connection(&CubicForm::from_constants(1.0, 0.0, 0.0, 0.0));
        assert_eq!(c.w12, PlaneForm::new(Expr::zero(), Expr::one()));
        assert!(c.w1.dx.is_zero_const() && c.w1.dy.is_zero_const());
        assert!(c.w2.dx.is_zero_const() && c.w2.dy.is_zero_const());
    }

    #[test]
    fn linear_forcing() {
        let c = build_projective_connection(&CubicForm::new(Expr::zero(), Expr::zero(), Expr::zero(), p("-x")));
        assert_eq!(c.w21, PlaneForm::new(p("x"), Expr::zero()));
        let asm = Assumptions::new();
        for f in [&c.w1, &c.w2] {
            assert_eq!(is_zero(&f.dx, &asm), TriBool::Zero);
            assert_eq!(is_zero(&f.dy, &asm), TriBool::Zero);
        }
    }

    #[test]
    fn roundtrip() {
        let c = CubicForm::new(Expr::zero(), Expr::one(), p("x"), p("y"));
        let back = geodesic_equation(&build_projective_connection(&c));
        let asm = Assumptions::new();
        for (u, v) in c.coefficients().iter().zip(back.coefficients()) {
            assert_eq!(is_zero(&(*u - v), &asm), TriBool::Zero);
        }
    }

    #[test]
    fn flat_line_develops_in_closed_form() {
        let curve = PlaneCurve::Closed { x: p("t"), y: Expr::zero() };
        let dev = develop_curve(&flat(), &curve, 0.0, 1.0, 1e-2).unwrap();
        for (t, h) in dev.times.iter().zip(&dev.frames) {
            let want = Matrix3::new(1.0, 0.0, 0.0, *t, 1.0, 0.0, 0.0, 0.0, 1.0);
            assert!((h - want).abs().max() < 1e-12);
        }
    }

    #[test]
    fn lines_stay_straight_and_parabola_bends() {
        let line = PlaneCurve::Closed { x: p("t"), y: p("3*t + 2") };
        let dev = develop_curve(&flat(), &line, 0.0, 1.0, 1e-2).unwrap();
        assert!(max_collinearity(&dev.points) < 1e-9);
        let parabola = PlaneCurve::Closed { x: p("t"), y: p("t^2") };
        let dev = develop_curve(&flat(), &parabola, 0.0, 1.0, 1e-3).unwrap();
        let pick = |t: usize| dev.points[t];
        assert!(collinearity(&pick(0), &pick(500), &pick(1000)).abs() > 1e-3);
    }

    #[test]
    fn geodesic_check() {
        let fl = flat();
        assert!(is_geodesic(&fl, &PlaneCurve::Closed { x: p("t"), y: p("3*t + 2") }, 0.0, 1.0, 1e-9).unwrap());
        assert!(!is_geodesic(&fl, &PlaneCurve::Closed { x: p("t"), y: p("t^2") }, 0.0, 1.0, 1e-3).unwrap());
        let cubic = CubicForm::from_constants(1.0, 0.0, 0.0, 0.0);
        let conn = build_projective_connection(&cubic);
        let sol = solve_geodesic(&cubic, [0.0, 0.0, 0.5], 0.5, 1e-3).unwrap();
        assert!(is_geodesic(&conn, &sol, 0.0, 0.5, 1e-6).unwrap());
    }

    #[test]
    fn geodesics_develop_to_lines() {
        let conn = build_projective_connection(&CubicForm::from_constants(0.7, -1.2, 0.4, 2.0));
        let dev = develop_geodesic(&conn, [0.0, 0.1, -0.3], 0.5, 1e-3).unwrap();
        let idx = [0, 100, 250, 400, 500];
        let pts: Vec<_> = idx.iter().map(|&i| dev.points[i]).collect();
        assert!(max_collinearity(&pts) < 1e-5);
        for h in &dev.frames {
            assert!((h.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_development_matches_closed_form() {
        let rows: Vec<(f64, f64, f64)> = (0..=200).map(|i| i as f64 / 200.0).map(|t| (t, t, t * t)).collect();
        let sampled = PlaneCurve::from_positions(&rows).unwrap();
        let closed = PlaneCurve::Closed { x: p("t"), y: p("t^2") };
        let a = develop_curve(&flat(), &sampled, 0.0, 1.0, 5e-3).unwrap();
        let b = develop_curve(&flat(), &closed, 0.0, 1.0, 5e-3).unwrap();
        let end = a.points.len() - 1;
        assert!((a.points[end] - b.points[end]).norm() < 1e-3);
    }
}
