use num_bigint::BigInt;

use super::expr::{Expr, Func, Node, Symbol};
use super::ratfun::{kernel_kind, KernelKind, RatFun};
use crate::Rational;

/// Derivative of a single kernel with respect to `v`.
pub(crate) fn kernel_derivative(k: &Expr, v: &Symbol) -> RatFun {
    match k.node() {
        Node::Var(s) => {
            if s == v {
                RatFun::constant(Rational::from_integer(BigInt::from(1)))
            } else {
                RatFun::zero()
            }
        }
        Node::Apply(f, u) => {
            let du = u.ratfun().derivative(v);
            if du.is_zero() {
                return RatFun::zero();
            }
            let outer: Expr = match f {
                Func::Exp => k.clone(),
                Func::Ln => Expr::one() / u,
                Func::Atan => Expr::one() / (Expr::one() + u * u),
                Func::Sin => u.cos(),
                Func::Cos => -u.sin(),
                Func::Abs => u.sign(),
                Func::Sign => return RatFun::zero(),
            };
            outer.ratfun().mul(&du)
        }
        Node::Pow(b, e) => {
            if let KernelKind::Root { base, q } = kernel_kind(k) {
                // d b^(1/q) = (1/q) b^(1/q) b'/b
                let db = base.ratfun().derivative(v);
                if db.is_zero() {
                    return RatFun::zero();
                }
                let coeff = Rational::new(BigInt::from(1), BigInt::from(q));
                return RatFun::kernel(k.clone()).mul(&db).div(&base.ratfun()).scale(&coeff);
            }
            // b^e = exp(e ln b)
            let de = e.ratfun().derivative(v);
            let db = b.ratfun().derivative(v);
            let mut inner = RatFun::zero();
            if !de.is_zero() {
                inner = inner.add(&de.mul(&b.ln().ratfun()));
            }
            if !db.is_zero() {
                inner = inner.add(&e.ratfun().mul(&db).div(&b.ratfun()));
            }
            RatFun::kernel(k.clone()).mul(&inner)
        }
        Node::Num(_) => RatFun::zero(),
        Node::Add(_) | Node::Mul(_) => k.ratfun().derivative(v),
    }
}

impl Expr {
    /// Exact partial derivative with respect to `v`, normalized.
    pub fn differentiate(&self, v: &Symbol) -> Expr {
        if !self.depends_on(v) {
            return Expr::zero();
        }
        Expr::from_ratfun(self.ratfun().derivative(v))
    }

    /// Partial derivative by variable name.
    pub fn diff(&self, name: &str) -> Expr {
        self.differentiate(&Symbol::new(name))
    }

    /// Repeated partial derivative, e.g. `nth_diff(&[z, z, y])`.
    pub fn diff_many(&self, names: &[&str]) -> Expr {
        names.iter().fold(self.clone(), |e, n| e.diff(n))
    }
}

/// `D e = ∂e/∂x + z ∂e/∂y + f ∂e/∂z`, the derivative along solutions of `y'' = f`.
pub fn total_derivative(e: &Expr, f: &Expr) -> Expr {
    let ex = e.diff("x");
    let ey = e.diff("y");
    let ez = e.diff("z");
    ex + Expr::z() * ey + f * ez
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_rule() {
        let z = Expr::z();
        assert_eq!(z.powi(3).diff("z"), Expr::int(3) * z.powi(2));
    }

    #[test]
    fn exponential_chain_rule() {
        let e = (-Expr::z()).exp();
        assert_eq!(e.diff("z"), -e.clone());
    }

    #[test]
    fn radical_derivative() {
        let z = Expr::z();
        let f = (Expr::one() + &z * &z).pow_rational(&Rational::new(3.into(), 2.into()));
        let expected = Expr::int(3) * &z * (Expr::one() + &z * &z).sqrt();
        assert_eq!(f.diff("z"), expected);
    }

    #[test]
    fn total_derivative_basics() {
        let f = Expr::var("f0") * Expr::x();
        assert_eq!(total_derivative(&Expr::y(), &f), Expr::z());
        assert_eq!(total_derivative(&Expr::z(), &f), f);
        let xz = Expr::x() * Expr::z();
        assert_eq!(total_derivative(&xz, &f), Expr::z() + Expr::x() * &f);
    }
}
