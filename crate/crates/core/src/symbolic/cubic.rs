use super::assume::Assumptions;
use super::expr::{Expr, Symbol};
use super::zero::{is_zero, TriBool};

/// Coefficients of `y'' = A z^3 + B z^2 + C z + D` with `A..D` functions of `(x, y)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicForm {
    pub a: Expr,
    pub b: Expr,
    pub c: Expr,
    pub d: Expr,
}

impl CubicForm {
    pub fn new(a: Expr, b: Expr, c: Expr, d: Expr) -> Self {
        CubicForm { a, b, c, d }
    }

    pub fn from_constants(a: f64, b: f64, c: f64, d: f64) -> Self {
        let r = |v: f64| Expr::rational(crate::symbolic::expr::rational_from_f64(v).expect("finite coefficient"));
        CubicForm::new(r(a), r(b), r(c), r(d))
    }

    /// The right-hand side `A z^3 + B z^2 + C z + D`.
    pub fn rhs(&self) -> Expr {
        let z = Expr::z();
        &self.a * z.powi(3) + &self.b * z.powi(2) + &self.c * &z + &self.d
    }

    pub fn coefficients(&self) -> [&Expr; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }
}

/// A zero test that could not be decided.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("undecidable zero test: {test}")]
pub struct Undecidable {
    pub test: String,
}

/// Reads off the cubic coefficients of `f` if `f` is a polynomial of degree at most three in `z`.
pub fn cubic_coefficients(f: &Expr, a: &Assumptions) -> Result<Option<CubicForm>, Undecidable> {
    let zs = Symbol::new("z");
    let f1 = f.differentiate(&zs);
    let f2 = f1.differentiate(&zs);
    let f3 = f2.differentiate(&zs);
    let f4 = f3.differentiate(&zs);
    match is_zero(&f4, a) {
        TriBool::Zero => {}
        TriBool::NonZero => return Ok(None),
        TriBool::Unknown => return Err(Undecidable { test: format!("f_zzzz = {f4}") }),
    }
    let zero = Expr::zero();
    let at0 = |e: &Expr| e.substitute(&zs, &zero);
    let ca = at0(&f3).scale(&crate::Rational::new(1.into(), 6.into()));
    let cb = at0(&f2).scale(&crate::Rational::new(1.into(), 2.into()));
    let cc = at0(&f1);
    let cd = at0(f);
    let form = CubicForm::new(ca, cb, cc, cd);
    let residual = f - form.rhs();
    match is_zero(&residual, a) {
        TriBool::Zero => Ok(Some(form)),
        TriBool::NonZero => Ok(None),
        TriBool::Unknown => Err(Undecidable { test: format!("f - cubic part = {residual}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse::parse_default;

    #[test]
    fn cube() {
        let f = parse_default("p^3").unwrap();
        let c = cubic_coefficients(&f, &Assumptions::new()).unwrap().unwrap();
        assert_eq!(c, CubicForm::new(Expr::one(), Expr::zero(), Expr::zero(), Expr::zero()));
    }

    #[test]
    fn exponential_is_not_cubic() {
        let f = parse_default("exp(-p)").unwrap();
        assert_eq!(cubic_coefficients(&f, &Assumptions::new()).unwrap(), None);
    }

    #[test]
    fn dual_family_representative() {
        let f = parse_default("(p^3 - p)/(2*x)").unwrap();
        let c = cubic_coefficients(&f, &Assumptions::new()).unwrap().unwrap();
        let half_x = Expr::one() / (Expr::int(2) * Expr::x());
        assert_eq!(c, CubicForm::new(half_x.clone(), Expr::zero(), -half_x, Expr::zero()));
    }
}
