use super::*;
use crate::lie::GroupElement;
use crate::symbolic::parse_default;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn quick() -> ClassifyOptions {
    ClassifyOptions { estimate_dimension: false, ..Default::default() }
}

fn run(f: &str, asm: &Assumptions) -> ClassificationReport {
    classify(&parse_default(f).unwrap(), asm, &quick()).unwrap()
}

fn z_box(lo: Rational, hi: Rational) -> Assumptions {
    Assumptions::new().with_interval("z", lo, hi).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn exponential_is_3c() {
    let rep = run("exp(-z)", &Assumptions::new());
    assert_eq!(rep.family, Family::C3);
    assert!(rel(rep.invariants.i1.unwrap(), 41.0 / 256.0) < 1e-10);
    assert_eq!(rep.points.len(), 5);
}

#[test]
fn power_law_lookup() {
    for alpha in [4i64, -1, 5] {
        let rep = run(&format!("z^({alpha})"), &Assumptions::new());
        let m = (alpha * (alpha - 3)) as f64;
        let want = (41.0 * m + 96.0) / (256.0 * m + 576.0);
        assert_eq!(rep.family, Family::A3, "alpha = {alpha}");
        for p in &rep.points {
            assert!(rel(p.i1.unwrap(), want) < 1e-8, "alpha = {alpha}");
        }
        let ps = rep.parameters.unwrap();
        assert_eq!(ps.pairing, Pairing::ThreeMinus);
        let a = alpha as f64;
        assert!(ps.alpha.iter().any(|v| (v - a).abs() < 1e-6), "{ps:?}");
    }
}

#[test]
fn arctan_family_recovers_alpha() {
    let rep = run("(1+z^2)^(3/2)*exp(-atan(z))", &Assumptions::new());
    assert_eq!(rep.family, Family::B3);
    assert!(rel(rep.invariants.i1.unwrap(), 13.0 / 128.0) < 1e-8);
    let ps = rep.parameters.unwrap();
    assert!((ps.alpha[0] - 1.0).abs() < 1e-6 && (ps.alpha[1] + 1.0).abs() < 1e-6);
}

#[test]
fn i2_lookup() {
    let rep = run("z^(3/2)", &Assumptions::new());
    assert_eq!(rep.family, Family::A3);
    assert!(rel(rep.invariants.i2.unwrap(), 1.0 / 36.0) < 1e-8);
    assert_eq!((rep.invariants.sign_ad, rep.invariants.sign_s3), (Some(1), Some(-1)));
    for p in &rep.points {
        let s = p.generic.unwrap();
        assert!(s.s1.abs() < 1e-8 && s.s2.abs() < 1e-8);
    }
    let rep = run("(1+z^2)^(3/2)", &Assumptions::new());
    assert_eq!(rep.family, Family::B3);
    assert_eq!((rep.invariants.sign_ad, rep.invariants.sign_s3), (Some(1), Some(1)));
}

#[test]
fn three_e_minus() {
    let asm = z_box(r(1, 10), r(9, 10));
    let rep = run("(z*(1-z^2) + 2*(1-z^2)^(3/2))/x", &asm);
    assert_eq!(rep.family, Family::EMinus);
    assert!(rel(rep.invariants.i2.unwrap(), 5.0 / 144.0) < 1e-7);
    let ps = rep.parameters.unwrap();
    assert!((ps.alpha[0] - 2.0).abs() < 1e-6 && (ps.alpha[1] + 2.0).abs() < 1e-6);
}

#[test]
fn three_e_plus_and_f() {
    let asm = z_box(r(11, 10), r(2, 1));
    let rep = run("(z*(1-z^2) + 2*(z^2-1)^(3/2))/x", &asm);
    assert_eq!(rep.family, Family::EPlus);
    assert!(rel(rep.invariants.i2.unwrap(), 1.0 / 48.0) < 1e-7);
    let rep = run("(z*(1+z^2) + 2*(1+z^2)^(3/2))/x", &Assumptions::new());
    assert_eq!(rep.family, Family::F3);
    assert!(rel(rep.invariants.i2.unwrap(), 1.0 / 48.0) < 1e-7);
    let rep = run("(z*(1+z^2) + 1/2*(1+z^2)^(3/2))/x", &Assumptions::new());
    assert_eq!(rep.family, Family::F3);
    assert!(rel(rep.invariants.i2.unwrap(), -1.0 / 12.0) < 1e-7);
}

#[test]
fn three_g() {
    let rep = run("(2*(1+z^2)*(x*z-y) + 2*(1+z^2)^(3/2))/(1+x^2+y^2)", &Assumptions::new());
    assert_eq!(rep.family, Family::G3);
    let ps = rep.parameters.unwrap();
    assert!((ps.alpha[0] - 2.0).abs() < 1e-6, "{ps:?}");
    assert!(rel(rep.invariants.i2.unwrap(), 2.0 / 36.0) < 1e-8);
}

#[test]
fn degenerate_branch_values() {
    for (f, fam, sign) in [("(z^3 - z)/(2*x)", Family::DPlus, 1), ("(-z^3 - z)/(2*x)", Family::DMinus, -1)] {
        let rep = run(f, &Assumptions::new());
        assert_eq!(rep.vanishing.d, TriBool::Zero);
        assert_eq!(rep.vanishing.a, TriBool::NonZero);
        assert_eq!(rep.family, fam);
        assert_eq!(rep.invariants.sign_s12, Some(sign));
        for p in &rep.points {
            let s = p.degenerate.unwrap();
            assert!(s.s13.abs() < 1e-8 && s.s23.abs() < 1e-8);
            assert!(rel(p.i1.unwrap(), 25.0 / 12.0) < 1e-7);
            assert!(rel(p.i2.unwrap(), -1.25) < 1e-7);
        }
    }
}

#[test]
fn linearizable_and_dual() {
    assert_eq!(run("z^3", &Assumptions::new()).family, Family::Linearizable);
    assert_eq!(run("y", &Assumptions::new()).family, Family::Linearizable);
    let rep = run("(z*(1-z^2) + (z^2-1)^(3/2))/x", &z_box(r(11, 10), r(2, 1)));
    assert_eq!(rep.vanishing.a, TriBool::Zero);
    assert_eq!(rep.vanishing.d, TriBool::NonZero);
    assert_eq!(rep.family, Family::DualCubic);
}

#[test]
fn generic_equation_is_undetermined() {
    assert_eq!(run("exp(-z) + z^4", &Assumptions::new()).family, Family::Undetermined);
}

#[test]
fn undeclared_branch_is_undecided() {
    let rep = run("(z*(1-z^2) + 2*abs(z^2-1)^(3/2))/x", &z_box(r(1, 2), r(2, 1)));
    assert!(matches!(rep.family, Family::Undecided | Family::Undetermined), "{:?}", rep.family);
}

#[test]
fn identity_normalization() {
    let m = [[0.3, -1.1, 0.7, 1.0, 0.5], [0.0, 0.0, 0.0, -4.0, 6.0]];
    let s = normalize_f1(&m, 0.5, 2.0).unwrap();
    assert_eq!((s.s1, s.s2, s.s3), (0.3, -1.1, 0.7));
}

#[test]
fn scaling_weights() {
    let (a, d, m) = f1_at::<f64>(&parse_default("exp(-z) + z^4").unwrap(), [0.7, 0.3, 0.4]).unwrap();
    let s = normalize_f1(&m, a, d).unwrap();
    let g = GroupElement::diagonal(1.3, 0.6, 2.2);
    let (x, y, z): (f64, f64, f64) = (1.3, 0.6, 2.2);
    let w = g.weights_ad();
    let t = normalize_f1(&apply_f1(&m, &g), a * w[0], d * w[1]).unwrap();
    let ws = [x.powi(4) / (y.powi(3) * z), x.powi(3) / (y * z * z), x.powi(4) / (y * y * z * z)];
    assert!(rel(t.s1, s.s1 * ws[0]) < 1e-10);
    assert!(rel(t.s2, s.s2 * ws[1]) < 1e-10);
    assert!(rel(t.s3, s.s3 * ws[2]) < 1e-10);
    assert!(rel(invariant_i1(&t), invariant_i1(&s)) < 1e-10);
    assert!(rel(invariant_i2(&t), invariant_i2(&s)) < 1e-10);
}

#[test]
fn rho_is_a_homomorphism() {
    let g = GroupElement { x: 1.3, y: 0.7, z: 2.1, t: 0.4, u: -0.9, v: 0.25 };
    let h = GroupElement { x: 0.8, y: 1.9, z: 0.6, t: -1.2, u: 0.3, v: 0.7 };
    let lhs = g.compose(&h).rho();
    let rhs = g.rho() * h.rho();
    assert!((lhs - rhs).abs().max() < 1e-10);
}

#[test]
fn h1_relations_hold_symbolically() {
    let f = parse_default("(z^3 - z)/(2*x)").unwrap();
    assert!(h1_matrix_checked(&f, &Assumptions::new()).is_ok());
    let zero = h1_matrix(&Expr::int(0));
    assert!(zero.iter().flatten().all(|e| *e == Expr::int(0)));
}

#[test]
fn transformed_equation_keeps_family() {
    let f = parse_default("z^4").unwrap();
    let t = PointTransform::Scale { lambda: r(3, 2), mu: r(-2, 3) };
    let asm = t.apply_to_assumptions(&Assumptions::new());
    let rep = classify(&t.apply_to_equation(&f), &asm, &quick()).unwrap();
    assert_eq!(rep.family, Family::A3);
    assert!(rel(rep.invariants.i1.unwrap(), 13.0 / 80.0) < 1e-8);
}

#[test]
fn symmetry_dimensions() {
    let p = [0.7, 0.3, 0.4];
    let d = |s: &str| symmetry_dimension_median(&parse_default(s).unwrap(), p, 3, 1e-7).unwrap();
    assert_eq!(d("0").dimension, 8);
    assert_eq!(d("exp(-z)").dimension, 3);
    assert_eq!(d("exp(-z) + z^4").dimension, 2);
}

#[test]
fn report_serializes_tags() {
    let rep = run("exp(-z)", &Assumptions::new());
    assert_eq!(Family::from_tag("3d+"), Some(Family::DPlus));
    assert_eq!(rep.family.tag(), "3c");
    let text = serde_json::to_string(&rep).unwrap();
    assert!(text.contains("\"family\":\"3c\""));
}
