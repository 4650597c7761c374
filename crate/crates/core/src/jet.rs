//! Truncated Taylor series in `(x, y, z)` about a base point.
//!
//! A [`Jet`] of order `K` stores the normalized coefficients `∂^(i+j+k) g / (i! j! k!)` for
//! `i + j + k ≤ K`. Differentiation lowers the order by one, so a pipeline needing `m`
//! derivatives of `f` starts from a jet of order at least `m`.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_traits::{Float, Signed};

use crate::cartan::{Coord, DiffAlgebra};
use crate::symbolic::eval::rational_power;
use crate::symbolic::{EvalError, Expr, Func, Node};
use crate::{Rational, Scalar};

/// Largest supported order.
pub const MAX_ORDER: usize = 16;

struct Layout {
    monos: Vec<[u8; 3]>,
    index: Vec<u32>,
}

const SIDE: usize = MAX_ORDER + 1;

fn layout() -> &'static Layout {
    static L: OnceLock<Layout> = OnceLock::new();
    L.get_or_init(|| {
        let mut monos = Vec::new();
        let mut index = vec![u32::MAX; SIDE * SIDE * SIDE];
        for d in 0..=MAX_ORDER {
            for i in (0..=d).rev() {
                for j in (0..=d - i).rev() {
                    let k = d - i - j;
                    index[(i * SIDE + j) * SIDE + k] = monos.len() as u32;
                    monos.push([i as u8, j as u8, k as u8]);
                }
            }
        }
        Layout { monos, index }
    })
}

/// Number of coefficients of a jet of order `k`.
pub fn size(k: usize) -> usize {
    (k + 1) * (k + 2) * (k + 3) / 6
}

fn idx(i: usize, j: usize, k: usize) -> usize {
    layout().index[(i * SIDE + j) * SIDE + k] as usize
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet<T> {
    order: usize,
    base: [T; 3],
    c: Vec<T>,
}

impl<T: Scalar> Jet<T> {
    pub fn constant(order: usize, base: [T; 3], v: T) -> Self {
        assert!(order <= MAX_ORDER, "jet order above {MAX_ORDER}");
        let mut c = vec![T::zero(); size(order)];
        c[0] = v;
        Jet { order, base, c }
    }

    /// The coordinate function `x`, `y` or `z`.
    pub fn variable(order: usize, base: [T; 3], which: Coord) -> Self {
        let (slot, v) = match which {
            Coord::X => (0, base[0]),
            Coord::Y => (1, base[1]),
            Coord::Z => (2, base[2]),
        };
        let mut out = Jet::constant(order, base, v);
        if order > 0 {
            let e = [usize::from(slot == 0), usize::from(slot == 1), usize::from(slot == 2)];
            out.c[idx(e[0], e[1], e[2])] = T::one();
        }
        out
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base(&self) -> [T; 3] {
        self.base
    }

    pub fn value(&self) -> T {
        self.c[0]
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|v| v.is_zero())
    }

    /// The partial derivative `∂^(i+j+k) g / ∂x^i ∂y^j ∂z^k` at the base point.
    pub fn derivative(&self, i: usize, j: usize, k: usize) -> T {
        if i + j + k > self.order {
            return T::nan();
        }
        let fact = |n: usize| (1..=n).fold(T::one(), |a, m| a * T::of(m as f64));
        self.c[idx(i, j, k)] * fact(i) * fact(j) * fact(k)
    }

    pub fn add(&self, o: &Jet<T>) -> Jet<T> {
        let order = self.order.min(o.order);
        let c = (0..size(order)).map(|n| self.c[n] + o.c[n]).collect();
        Jet { order, base: self.base, c }
    }

    pub fn sub(&self, o: &Jet<T>) -> Jet<T> {
        let order = self.order.min(o.order);
        let c = (0..size(order)).map(|n| self.c[n] - o.c[n]).collect();
        Jet { order, base: self.base, c }
    }

    pub fn scale(&self, s: T) -> Jet<T> {
        Jet { order: self.order, base: self.base, c: self.c.iter().map(|v| *v * s).collect() }
    }

    pub fn add_scalar(&self, s: T) -> Jet<T> {
        let mut out = self.clone();
        out.c[0] += s;
        out
    }

    pub fn mul(&self, o: &Jet<T>) -> Jet<T> {
        let order = self.order.min(o.order);
        let l = layout();
        let mut c = vec![T::zero(); size(order)];
        let mut start = 0;
        for d in 0..=order {
            let end = size(d);
            let limit = size(order - d);
            for r in start..end {
                let a = self.c[r];
                if a.is_zero() {
                    continue;
                }
                let [i, j, k] = l.monos[r];
                for s in 0..limit {
                    let b = o.c[s];
                    if b.is_zero() {
                        continue;
                    }
                    let [p, q, w] = l.monos[s];
                    let t = idx((i + p) as usize, (j + q) as usize, (k + w) as usize);
                    c[t] += a * b;
                }
            }
            start = end;
        }
        Jet { order, base: self.base, c }
    }

    /// Partial derivative; the result has order one less.
    pub fn partial(&self, which: Coord) -> Jet<T> {
        assert!(self.order > 0, "cannot differentiate an order-zero jet");
        let order = self.order - 1;
        let l = layout();
        let c = l.monos[..size(order)]
            .iter()
            .map(|&[i, j, k]| {
                let (i, j, k) = (i as usize, j as usize, k as usize);
                match which {
                    Coord::X => self.c[idx(i + 1, j, k)] * T::of((i + 1) as f64),
                    Coord::Y => self.c[idx(i, j + 1, k)] * T::of((j + 1) as f64),
                    Coord::Z => self.c[idx(i, j, k + 1)] * T::of((k + 1) as f64),
                }
            })
            .collect();
        Jet { order, base: self.base, c }
    }

    /// `g(self)` from the univariate Taylor coefficients `g_n` of `g` at the base value.
    fn compose(&self, g: &[T]) -> Jet<T> {
        let mut h = self.clone();
        h.c[0] = T::zero();
        let mut acc = Jet::constant(self.order, self.base, g[self.order.min(g.len() - 1)]);
        for n in (0..self.order.min(g.len() - 1)).rev() {
            acc = acc.mul(&h).add_scalar(g[n]);
        }
        acc
    }

    pub fn exp(&self) -> Jet<T> {
        let e = Float::exp(self.value());
        let mut g = Vec::with_capacity(self.order + 1);
        let mut f = T::one();
        for n in 0..=self.order {
            if n > 0 {
                f *= T::of(n as f64);
            }
            g.push(e / f);
        }
        self.compose(&g)
    }

    pub fn ln(&self) -> Option<Jet<T>> {
        let u = self.value();
        if u <= T::zero() {
            return None;
        }
        let mut g = vec![Float::ln(u)];
        let mut p = T::one();
        for n in 1..=self.order {
            p *= u;
            let s = if n % 2 == 1 { T::one() } else { -T::one() };
            g.push(s / (T::of(n as f64) * p));
        }
        Some(self.compose(&g))
    }

    /// `self^r` on the real branch; `None` outside the domain.
    pub fn powr(&self, r: &Rational) -> Option<Jet<T>> {
        let u = self.value();
        let top = rational_power(u, r)?;
        if r.is_integer() && !r.is_negative() {
            let n = u32::try_from(r.numer()).ok()?;
            return Some(self.powi(n));
        }
        if u.is_zero() {
            return None;
        }
        let rv = T::from_rational(r);
        let mut g = vec![top];
        let mut coeff = top;
        for n in 1..=self.order {
            coeff = coeff * (rv - T::of((n - 1) as f64)) / (T::of(n as f64) * u);
            g.push(coeff);
        }
        Some(self.compose(&g))
    }

    pub fn powi(&self, n: u32) -> Jet<T> {
        let mut acc = Jet::constant(self.order, self.base, T::one());
        let mut b = self.clone();
        let mut m = n;
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(&b);
            }
            m >>= 1;
            if m > 0 {
                b = b.mul(&b);
            }
        }
        acc
    }

    pub fn recip(&self) -> Option<Jet<T>> {
        self.powr(&Rational::from_integer((-1).into()))
    }

    pub fn atan(&self) -> Jet<T> {
        let u = self.value();
        let k = self.order;
        // 1/(1 + (u + s)^2) as a series in s, integrated term by term
        let den = [T::one() + u * u, T::of(2.0) * u, T::one()];
        let mut q = vec![T::zero(); k.max(1)];
        for n in 0..q.len() {
            let mut v = if n == 0 { T::one() } else { T::zero() };
            for m in 1..=2.min(n) {
                v -= den[m] * q[n - m];
            }
            q[n] = v / den[0];
        }
        let mut g = vec![Float::atan(u)];
        for n in 1..=k {
            g.push(q[n - 1] / T::of(n as f64));
        }
        self.compose(&g)
    }

    fn sin_cos_coeffs(&self, cos: bool) -> Vec<T> {
        let (s, c) = (Float::sin(self.value()), Float::cos(self.value()));
        let cycle = if cos { [c, -s, -c, s] } else { [s, c, -s, -c] };
        let mut f = T::one();
        (0..=self.order)
            .map(|n| {
                if n > 0 {
                    f *= T::of(n as f64);
                }
                cycle[n % 4] / f
            })
            .collect()
    }

    pub fn sin(&self) -> Jet<T> {
        self.compose(&self.sin_cos_coeffs(false))
    }

    pub fn cos(&self) -> Jet<T> {
        self.compose(&self.sin_cos_coeffs(true))
    }
}

impl<T: Scalar> DiffAlgebra for Jet<T> {
    fn constant(&self, r: &Rational) -> Self {
        Jet::constant(self.order, self.base, T::from_rational(r))
    }

    fn coord(&self, c: Coord) -> Self {
        Jet::variable(self.order, self.base, c)
    }

    fn partial(&self, c: Coord) -> Self {
        Jet::partial(self, c)
    }

    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }

    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }

    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }

    fn scaled(&self, r: &Rational) -> Self {
        self.scale(T::from_rational(r))
    }
}

/// Taylor expansion of `e` to the given order about `(x, y, z) = base`.
pub fn expand<T: Scalar>(e: &Expr, base: [T; 3], order: usize) -> Result<Jet<T>, EvalError> {
    let mut memo: HashMap<usize, Jet<T>> = HashMap::new();
    expand_rec(e, base, order, &mut memo)
}

fn expand_rec<T: Scalar>(
    e: &Expr,
    base: [T; 3],
    order: usize,
    memo: &mut HashMap<usize, Jet<T>>,
) -> Result<Jet<T>, EvalError> {
    if let Some(j) = memo.get(&e.address()) {
        return Ok(j.clone());
    }
    let out = match e.node() {
        Node::Num(r) => Jet::constant(order, base, T::from_rational(r)),
        Node::Var(s) => match s.name() {
            "x" => Jet::variable(order, base, Coord::X),
            "y" => Jet::variable(order, base, Coord::Y),
            "z" => Jet::variable(order, base, Coord::Z),
            other => return Err(EvalError::Unbound(other.to_string())),
        },
        Node::Add(v) => {
            let mut acc = Jet::constant(order, base, T::zero());
            for t in v {
                acc = acc.add(&expand_rec(t, base, order, memo)?);
            }
            acc
        }
        Node::Mul(v) => {
            let mut acc = Jet::constant(order, base, T::one());
            for t in v {
                acc = acc.mul(&expand_rec(t, base, order, memo)?);
            }
            acc
        }
        Node::Pow(b, x) => {
            let bj = expand_rec(b, base, order, memo)?;
            match x.as_rational() {
                Some(r) => bj.powr(r).ok_or_else(|| {
                    if bj.value().is_zero() {
                        EvalError::DivisionByZero(e.to_string())
                    } else {
                        EvalError::NegativeRoot(e.to_string())
                    }
                })?,
                None => {
                    let l = bj.ln().ok_or_else(|| EvalError::NegativeRoot(e.to_string()))?;
                    expand_rec(x, base, order, memo)?.mul(&l).exp()
                }
            }
        }
        Node::Apply(f, a) => {
            let aj = expand_rec(a, base, order, memo)?;
            match f {
                Func::Exp => aj.exp(),
                Func::Ln => aj.ln().ok_or_else(|| EvalError::LogNonPositive(e.to_string()))?,
                Func::Atan => aj.atan(),
                Func::Sin => aj.sin(),
                Func::Cos => aj.cos(),
                Func::Abs | Func::Sign => {
                    let v = aj.value();
                    if v.is_zero() {
                        return Err(EvalError::NonFinite(e.to_string()));
                    }
                    let s = if v > T::zero() { T::one() } else { -T::one() };
                    if *f == Func::Abs {
                        aj.scale(s)
                    } else {
                        Jet::constant(order, base, s)
                    }
                }
            }
        }
    };
    if out.c.iter().any(|v| !Float::is_finite(*v)) {
        return Err(EvalError::NonFinite(e.to_string()));
    }
    memo.insert(e.address(), out.clone());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_default;
    use approx::assert_relative_eq;

    #[test]
    fn derivatives_match_symbolic() {
        let e = parse_default("exp(x*z)*atan(y) + (1+z^2)^(3/2)/x + sin(y*z)").unwrap();
        let base = [0.7, 0.3, 0.4];
        let j = expand(&e, base, 6).unwrap();
        let pt = [("x", 0.7), ("y", 0.3), ("z", 0.4)];
        for (i, k, l) in [(0, 0, 0), (1, 0, 0), (0, 2, 1), (1, 1, 3), (2, 0, 4), (0, 0, 6)] {
            let mut d = e.clone();
            for _ in 0..i {
                d = d.diff("x");
            }
            for _ in 0..k {
                d = d.diff("y");
            }
            for _ in 0..l {
                d = d.diff("z");
            }
            assert_relative_eq!(j.derivative(i, k, l), d.eval_f64(&pt).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn partial_commutes_with_expansion() {
        let e = parse_default("z^4*exp(-y) + x^3*z").unwrap();
        let j = expand(&e, [1.0, 0.5, 2.0], 5).unwrap();
        let viaj = j.partial(Coord::Z).partial(Coord::X);
        let direct = expand(&e.diff("z").diff("x"), [1.0, 0.5, 2.0], 3).unwrap();
        for (a, b) in viaj.c.iter().zip(direct.c.iter()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
    }
}
