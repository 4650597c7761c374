//! Point transformations of the plane acting on equations and on their assumptions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::symbolic::{Assumptions, Expr, Symbol};
use crate::Rational;

/// Translations `(x, y) → (x + c1, y + c2)` and scalings `(x, y) → (λx, μy)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PointTransform {
    Translate {
        #[serde(with = "crate::serial::rational")]
        dx: Rational,
        #[serde(with = "crate::serial::rational")]
        dy: Rational,
    },
    Scale {
        #[serde(with = "crate::serial::rational")]
        lambda: Rational,
        #[serde(with = "crate::serial::rational")]
        mu: Rational,
    },
}

impl PointTransform {
    /// Old coordinates `(x, y, z)` in terms of the new ones.
    fn inverse_substitution(&self) -> [(Symbol, Expr); 3] {
        let (x, y, z) = (Expr::x(), Expr::y(), Expr::z());
        let s = |n: &str| Symbol::new(n);
        match self {
            PointTransform::Translate { dx, dy } => {
                [(s("x"), x - Expr::rational(dx.clone())), (s("y"), y - Expr::rational(dy.clone())), (s("z"), z)]
            }
            PointTransform::Scale { lambda, mu } => [
                (s("x"), x / Expr::rational(lambda.clone())),
                (s("y"), y / Expr::rational(mu.clone())),
                (s("z"), z * Expr::rational(lambda / mu)),
            ],
        }
    }

    /// Right-hand side of the transformed equation `Y'' = f̂(X, Y, Y')`.
    pub fn apply_to_equation(&self, f: &Expr) -> Expr {
        let moved = f.substitute_all(&self.inverse_substitution());
        match self {
            PointTransform::Translate { .. } => moved,
            PointTransform::Scale { lambda, mu } => moved * Expr::rational(mu / (lambda * lambda)),
        }
    }

    fn map_interval(&self, var: &str, (lo, hi): (Rational, Rational)) -> (Rational, Rational) {
        let (a, b) = match (self, var) {
            (PointTransform::Translate { dx, .. }, "x") => (lo + dx, hi + dx),
            (PointTransform::Translate { dy, .. }, "y") => (lo + dy, hi + dy),
            (PointTransform::Translate { .. }, _) => (lo, hi),
            (PointTransform::Scale { lambda, .. }, "x") => (lo * lambda, hi * lambda),
            (PointTransform::Scale { mu, .. }, "y") => (lo * mu, hi * mu),
            (PointTransform::Scale { lambda, mu }, _) => (lo * mu / lambda, hi * mu / lambda),
        };
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Transports sign declarations and the sampling box.
    pub fn apply_to_assumptions(&self, a: &Assumptions) -> Assumptions {
        let mut bounds = BTreeMap::new();
        for v in ["x", "y", "z"] {
            let s = Symbol::new(v);
            bounds.insert(s.clone(), self.map_interval(v, a.interval(&s)));
        }
        a.transformed(&self.inverse_substitution(), bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_default;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn scaling_of_cubic() {
        // y'' = y'^3 under x → 2x, y → 3y: Z = 3/2 z, Y'' = 3/4 y'' = 3/4 (2/3 Z)^3
        let t = PointTransform::Scale { lambda: r(2, 1), mu: r(3, 1) };
        let g = t.apply_to_equation(&parse_default("z^3").unwrap());
        assert_eq!(g, parse_default("2/9*z^3").unwrap());
    }

    #[test]
    fn translation_moves_box() {
        let t = PointTransform::Translate { dx: r(1, 1), dy: r(-1, 2) };
        let a = t.apply_to_assumptions(&Assumptions::new());
        assert_eq!(a.interval(&Symbol::new("x")), (r(3, 2), r(3, 1)));
        assert_eq!(a.interval(&Symbol::new("y")), (r(0, 1), r(3, 2)));
        assert_eq!(a.interval(&Symbol::new("z")), (r(1, 2), r(2, 1)));
    }
}
