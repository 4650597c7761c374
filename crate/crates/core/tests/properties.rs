use nalgebra::Vector3;
use proptest::prelude::*;
use sode::cartan::curvature_scalars;
use sode::classify::{classify, ClassifyOptions, PointTransform};
use sode::lie::{structure_constants, GroupElement};
use sode::projective::{build_projective_connection, develop_geodesic, geodesic_equation, max_collinearity};
use sode::symbolic::{is_zero, parse_default, CubicForm};
use sode::{Assumptions, Expr, Rational, TriBool};

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn vanishes(e: &Expr) -> bool {
    is_zero(e, &Assumptions::new()) == TriBool::Zero
}

/// Small polynomial in x, y, z with integer coefficients.
fn poly() -> impl Strategy<Value = String> {
    prop::collection::vec((-3i64..=3, 0u32..=2, 0u32..=2, 0u32..=2), 1..4).prop_map(|terms| {
        let parts: Vec<String> = terms.iter().map(|(c, i, j, k)| format!("({c})*x^{i}*y^{j}*z^{k}")).collect();
        format!("1 + {}", parts.join(" + "))
    })
}

fn group_element() -> impl Strategy<Value = GroupElement<f64>> {
    (0.5..2.0, 0.5..2.0, 0.5..2.0, -1.0..1.0, -1.0..1.0, -1.0..1.0).prop_map(|(x, y, z, t, u, v)| GroupElement {
        x,
        y,
        z,
        t,
        u,
        v,
    })
}

fn factor() -> impl Strategy<Value = Rational> {
    (1i64..=12, any::<bool>()).prop_map(|(n, neg)| if neg { r(-n - 3, 4) } else { r(n + 3, 4) })
}

#[test]
fn jacobi_identity() {
    let c = structure_constants::<f64>();
    for i in 0..8 {
        for j in 0..8 {
            for k in 0..8 {
                for l in 0..8 {
                    let mut s = 0.0;
                    for m in 0..8 {
                        s += c[i][j][m] * c[m][k][l] + c[j][k][m] * c[m][i][l] + c[k][i][m] * c[m][j][l];
                    }
                    assert!(s.abs() < 1e-12, "Jacobi fails at ({i},{j},{k}) component {l}");
                }
                assert_eq!(c[i][j][k], -c[j][i][k]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rho_is_a_homomorphism(a in group_element(), b in group_element()) {
        let err = (a.compose(&b).rho() - a.rho() * b.rho()).abs().max();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn adjoint_is_a_homomorphism(a in group_element(), b in group_element()) {
        let err = (a.compose(&b).adjoint() - a.adjoint() * b.adjoint()).abs().max();
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn common_factors_cancel(p in poly(), q in poly(), s in poly()) {
        let (p, q, s) = (parse_default(&p).unwrap(), parse_default(&q).unwrap(), parse_default(&s).unwrap());
        prop_assume!(!vanishes(&q) && !vanishes(&s));
        let lhs = (&p * &q) / (&q * &s);
        prop_assert!(vanishes(&(lhs - &p / &s)));
    }

    #[test]
    fn printed_form_parses_back(p in poly(), q in poly()) {
        prop_assume!(!vanishes(&parse_default(&q).unwrap()));
        let e = parse_default(&format!("({p})/({q}) + exp({q})")).unwrap();
        let back = parse_default(&e.to_string()).unwrap();
        prop_assert!(vanishes(&(back - e)));
    }

    #[test]
    fn projective_roundtrip(k in prop::array::uniform4(-5i64..=5)) {
        let c = CubicForm::new(Expr::int(k[0]), Expr::int(k[1]), Expr::int(k[2]), Expr::int(k[3]));
        let back = geodesic_equation(&build_projective_connection(&c));
        for (u, v) in c.coefficients().iter().zip(back.coefficients()) {
            prop_assert!(vanishes(&(*u - v)));
        }
    }

    #[test]
    fn geodesics_develop_to_lines(k in prop::array::uniform4(-1.0..1.0f64), y0 in -1.0..1.0f64, p0 in -1.0..1.0f64) {
        let conn = build_projective_connection(&CubicForm::from_constants(k[0], k[1], k[2], k[3]));
        let dev = develop_geodesic(&conn, [0.0, y0, p0], 0.4, 1e-3).unwrap();
        let picks: Vec<Vector3<f64>> = dev.points.iter().step_by(20).copied().collect();
        prop_assert!(max_collinearity(&picks) < 1e-5);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn vanishing_pattern_survives_translation(dx in -8i64..=8, dy in -8i64..=8, pick in 0usize..4) {
        let src = ["0", "z^4 + x*y", "y*z^3 - x*z^2", "exp(-z) + y"][pick];
        let f = parse_default(src).unwrap();
        let t = PointTransform::Translate { dx: r(dx, 4), dy: r(dy, 4) };
        let (s, m) = (curvature_scalars(&f), curvature_scalars(&t.apply_to_equation(&f)));
        prop_assert_eq!(vanishes(&s.a), vanishes(&m.a));
        prop_assert_eq!(vanishes(&s.d), vanishes(&m.d));
    }

    #[test]
    fn invariants_survive_scaling(lambda in factor(), mu in factor(), pick in 0usize..3) {
        let src = ["exp(-z)", "z^4", "(1+z^2)^(3/2)*exp(-atan(z))"][pick];
        let f = parse_default(src).unwrap();
        let opts = ClassifyOptions { estimate_dimension: false, ..Default::default() };
        let base = classify(&f, &Assumptions::new(), &opts).unwrap();
        let t = PointTransform::Scale { lambda, mu };
        let moved = classify(&t.apply_to_equation(&f), &t.apply_to_assumptions(&Assumptions::new()), &opts).unwrap();
        prop_assert_eq!(moved.family, base.family);
        for (u, v) in [(base.invariants.i1, moved.invariants.i1), (base.invariants.i2, moved.invariants.i2)] {
            match (u, v) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() <= 1e-8 * u.abs().max(1.0)),
                (u, v) => prop_assert_eq!(u.is_some(), v.is_some()),
            }
        }
    }
}
