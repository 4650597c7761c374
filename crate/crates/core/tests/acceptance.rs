//! One PASS/FAIL line per acceptance criterion, written straight to stdout so it shows without
//! `--nocapture`.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sode::cartan::{ad_actions, connection_matrix, covariant_derivative, curvature_scalars, EquivariantFunction};
use sode::classify::{
    classify, symmetry_dimension_estimate, ClassificationReport, ClassifyOptions, Family, PointTransform,
};
use sode::distribution::{
    frobenius_forms, frobenius_integrable, integrate_g_structure, solve_linear, superposition_solve, AlgebraConstraint,
    DistributionSpec, MatrixPath,
};
use sode::forms::Form;
use sode::lie::GroupElement;
use sode::projective::{
    build_projective_connection, develop_curve, develop_geodesic, geodesic_equation, max_collinearity, PlaneCurve,
};
use sode::symbolic::{is_zero, parse, parse_default, Chart, CubicForm};
use sode::{Assumptions, Expr, Rational, TriBool};

const REL_TOL: f64 = 1e-8;
const PARAM_TOL: f64 = 1e-7;
const SMALL: f64 = 1e-8;
const COLLINEAR: f64 = 1e-5;
const PARABOLA: f64 = 1e-3;
const FLOW_TOL: f64 = 1e-8;
const DET_TOL: f64 = 1e-9;
const SUPERPOSE_TOL: f64 = 1e-8;
const SELF_TEST: f64 = 1e-10;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn quick() -> ClassifyOptions {
    ClassifyOptions { estimate_dimension: false, ..Default::default() }
}

fn run(f: &str, asm: &Assumptions) -> Result<ClassificationReport, String> {
    let f = parse_default(f).map_err(|e| e.to_string())?;
    classify(&f, asm, &quick()).map_err(|e| e.to_string())
}

fn z_box(lo: Rational, hi: Rational) -> Assumptions {
    Assumptions::new().with_interval("z", lo, hi).unwrap()
}

fn points_i1(rep: &ClassificationReport, want: f64) -> Result<(), String> {
    ensure(rep.points.len() == 5, format!("{} sample points", rep.points.len()))?;
    for p in &rep.points {
        let v = p.i1.ok_or("missing I1")?;
        ensure(rel(v, want) < REL_TOL, format!("I1 = {v}, want {want}"))?;
    }
    Ok(())
}

fn c1_flatness() -> Check {
    let s = curvature_scalars(&Expr::zero());
    ensure([&s.a, &s.b, &s.c, &s.d].iter().all(|e| **e == Expr::zero()), "nonzero scalar for f = 0")?;
    let rep = classify(&Expr::zero(), &Assumptions::new(), &ClassifyOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.family == Family::Linearizable, format!("family {:?}", rep.family))?;
    let dim = rep.symmetry.map(|s| s.dimension);
    ensure(dim == Some(8), format!("dimension {dim:?}"))?;
    Ok("scalars exactly 0, linearizable, dim 8".into())
}

fn c2_power_law() -> Check {
    let mut values = Vec::new();
    for alpha in [4i64, -1, 5] {
        let rep = run(&format!("z^({alpha})"), &Assumptions::new())?;
        let m = (alpha * (alpha - 3)) as f64;
        let want = (41.0 * m + 96.0) / (256.0 * m + 576.0);
        points_i1(&rep, want).map_err(|e| format!("alpha = {alpha}: {e}"))?;
        values.push(rep.invariants.i1.ok_or("missing I1")?);
    }
    ensure(
        rel(values[0], 13.0 / 80.0) < REL_TOL && rel(values[1], 13.0 / 80.0) < REL_TOL,
        "alpha 4 and -1 differ from 13/80",
    )?;
    Ok(format!("I1 = {:.10}, {:.10}, {:.10}", values[0], values[1], values[2]))
}

fn c3_i1_lookup() -> Check {
    let rep = run("(1+z^2)^(3/2)*exp(-atan(z))", &Assumptions::new())?;
    points_i1(&rep, 13.0 / 128.0)?;
    let rep = run("exp(-z)", &Assumptions::new())?;
    points_i1(&rep, 41.0 / 256.0)?;
    Ok("13/128 and 41/256".into())
}

fn c4_i2_lookup() -> Check {
    let rep = run("z^(3/2)", &Assumptions::new())?;
    ensure(rel(rep.invariants.i2.ok_or("missing I2")?, 1.0 / 36.0) < REL_TOL, "z^(3/2): I2")?;
    for p in &rep.points {
        let s = p.generic.ok_or("missing semi-invariants")?;
        ensure(s.s1.abs() < SMALL && s.s2.abs() < SMALL, format!("s1 = {}, s2 = {}", s.s1, s.s2))?;
    }
    let signs = (rep.invariants.sign_ad, rep.invariants.sign_s3);
    ensure(signs == (Some(1), Some(-1)), format!("z^(3/2) signs {signs:?}"))?;
    let rep = run("(1+z^2)^(3/2)", &Assumptions::new())?;
    ensure(rel(rep.invariants.i2.ok_or("missing I2")?, 1.0 / 36.0) < REL_TOL, "(1+z^2)^(3/2): I2")?;
    let signs = (rep.invariants.sign_ad, rep.invariants.sign_s3);
    ensure(signs == (Some(1), Some(1)), format!("(1+z^2)^(3/2) signs {signs:?}"))?;
    Ok("I2 = 1/36 with signs (+,-) and (+,+)".into())
}

fn c5_parameter_law() -> Check {
    let rep = run("(z*(1-z^2) + 2*(1-z^2)^(3/2))/x", &z_box(r(1, 10), r(9, 10)))?;
    ensure(rep.family == Family::EMinus, format!("family {:?}", rep.family))?;
    let i2 = rep.invariants.i2.ok_or("missing I2")?;
    ensure(rel(i2, 5.0 / 144.0) < PARAM_TOL, format!("I2 = {i2}"))?;
    let ps = rep.parameters.ok_or("missing parameters")?;
    let mut got = ps.alpha;
    got.sort_by(f64::total_cmp);
    ensure((got[0] + 2.0).abs() < 1e-6 && (got[1] - 2.0).abs() < 1e-6, format!("parameters {got:?}"))?;
    Ok(format!("I2 = {i2:.10}, parameters {{{:.6}, {:.6}}}", got[0], got[1]))
}

fn c6_degenerate() -> Check {
    for (f, sign) in [("(z^3 - z)/(2*x)", 1), ("(-z^3 - z)/(2*x)", -1)] {
        let rep = run(f, &Assumptions::new())?;
        ensure(rep.vanishing.d == TriBool::Zero && rep.vanishing.a == TriBool::NonZero, format!("{f}: vanishing"))?;
        ensure(rep.invariants.sign_s12 == Some(sign), format!("{f}: sign(s12) {:?}", rep.invariants.sign_s12))?;
        for p in &rep.points {
            let s = p.degenerate.ok_or("missing semi-invariants")?;
            ensure(s.s13.abs() < SMALL && s.s23.abs() < SMALL, format!("{f}: s13 = {}, s23 = {}", s.s13, s.s23))?;
            let (i1, i2) = (p.i1.ok_or("missing I1")?, p.i2.ok_or("missing I2")?);
            ensure(
                rel(i1, 25.0 / 12.0) < PARAM_TOL && rel(i2, -1.25) < PARAM_TOL,
                format!("{f}: I1 = {i1}, I2 = {i2}"),
            )?;
        }
    }
    Ok("25/12, -5/4, sign(s12) = +/-".into())
}

fn random_coefficient(rng: &mut ChaCha8Rng) -> String {
    let atoms = ["1", "x", "y", "x*y", "x^2", "y^2", "exp(x)", "sin(y)", "1/(1+x^2)"];
    let terms: Vec<String> = (0..rng.random_range(0..=3))
        .map(|_| format!("({})*{}", rng.random_range(-5i64..=5), atoms[rng.random_range(0..atoms.len())]))
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

fn c7_roundtrip() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let asm = Assumptions::new();
    for k in 0..20 {
        let parts: Vec<Expr> = (0..4).map(|_| parse_default(&random_coefficient(&mut rng)).unwrap()).collect();
        let c = CubicForm::new(parts[0].clone(), parts[1].clone(), parts[2].clone(), parts[3].clone());
        let back = geodesic_equation(&build_projective_connection(&c));
        for (u, v) in c.coefficients().iter().zip(back.coefficients()) {
            ensure(is_zero(&(*u - v), &asm) == TriBool::Zero, format!("form {k}: {u} vs {v}"))?;
        }
    }
    Ok("20 random cubic forms".into())
}

fn c8_straightness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let k: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conn = build_projective_connection(&CubicForm::from_constants(k[0], k[1], k[2], k[3]));
        let start = [0.0, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let dev = develop_geodesic(&conn, start, 0.5, 1e-3).map_err(|e| e.to_string())?;
        let picks: Vec<Vector3<f64>> = dev.points.iter().step_by(10).copied().collect();
        worst = worst.max(max_collinearity(&picks));
    }
    ensure(worst < COLLINEAR, format!("max |det| = {worst:e}"))?;
    let t = Chart::new(&["t"]);
    let parabola = PlaneCurve::Closed { x: parse("t", &t).unwrap(), y: parse("t^2", &t).unwrap() };
    let flat = build_projective_connection(&CubicForm::from_constants(0.0, 0.0, 0.0, 0.0));
    let dev = develop_curve(&flat, &parabola, 0.0, 0.5, 1e-3).map_err(|e| e.to_string())?;
    let picks: Vec<Vector3<f64>> = dev.points.iter().step_by(10).copied().collect();
    let bent = max_collinearity(&picks);
    ensure(bent > PARABOLA, format!("parabola |det| = {bent:e}"))?;
    Ok(format!("geodesics {worst:.2e}, parabola {bent:.2e}"))
}

fn c9_frobenius() -> Check {
    let chart = Chart::default();
    let asm = Assumptions::new();
    let p = |s: &str| parse(s, &chart).unwrap();
    let contact = Form::one_form(&[p("-z"), p("1"), p("0")]);
    let top = &frobenius_forms(&chart, &[contact])[0];
    ensure(top.coeff(&[0, 1, 2]) == Expr::int(-1), format!("wedge coefficient {}", top.coeff(&[0, 1, 2])))?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let polys = ["x", "y", "x*y", "x^2", "y^2", "z*x", "z*y", "z^2"];
    let pick = |rng: &mut ChaCha8Rng| -> String {
        (0..2)
            .map(|_| format!("({})*{}", rng.random_range(-3i64..=3), polys[rng.random_range(0..polys.len())]))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    let mut tally = [0usize; 2];
    for k in 0..10 {
        let form = if k % 2 == 0 {
            let (g, h) = (pick(&mut rng), pick(&mut rng));
            Form::one_form(&[p(&g), p(&h), p("1")])
        } else {
            let g = p(&format!("x*y*{} + {}", rng.random_range(1i64..=4), pick(&mut rng).replace('z', "x")));
            let scale = p("exp(x)");
            let dg = |v: &str| g.diff(v);
            Form::one_form(&[scale.clone() * dg("x"), scale.clone() * dg("y"), scale])
        };
        let spec = DistributionSpec::Forms { chart: chart.clone(), forms: vec![form] };
        let by_form = frobenius_integrable(&spec, &asm).map_err(|e| e.to_string())?;
        let gens = spec.kernel_generators(&asm).map_err(|e| e.to_string())?;
        let by_bracket = frobenius_integrable(&DistributionSpec::Generators(gens), &asm).map_err(|e| e.to_string())?;
        ensure(by_form == by_bracket, format!("example {k}: forms {by_form:?}, brackets {by_bracket:?}"))?;
        ensure(by_form != TriBool::Unknown, format!("example {k}: undecided"))?;
        tally[usize::from(by_form == TriBool::Zero)] += 1;
    }
    Ok(format!("coefficient -1; 10 examples agree ({} integrable, {} not)", tally[1], tally[0]))
}

fn t_path(rows: &[&[&str]], constraint: AlgebraConstraint) -> MatrixPath<f64> {
    let t = Chart::new(&["t"]);
    let entries = rows.iter().map(|row| row.iter().map(|s| parse(s, &t).unwrap()).collect()).collect();
    MatrixPath::closed(entries, constraint).unwrap()
}

fn c10_g_structure() -> Check {
    let m = DMatrix::from_row_slice(2, 2, &[0.3, 1.0, -0.5, -0.3]);
    let x = t_path(&[&["0.3*(1+t^2)", "1+t^2"], &["-0.5*(1+t^2)", "-0.3*(1+t^2)"]], AlgebraConstraint::Traceless);
    let id = DMatrix::<f64>::identity(2, 2);
    let traj = integrate_g_structure(&x, &id, 0.0, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let exact = (&m * (1.0 + 1.0 / 3.0)).exp();
    let closed = (traj.values.last().unwrap() - exact).amax();
    ensure(closed < FLOW_TOL, format!("closed form error {closed:e}"))?;

    let y = t_path(
        &[&["sin(t)", "1", "t"], &["t^2", "-cos(t)", "0"], &["1", "exp(-t)", "cos(t)-sin(t)"]],
        AlgebraConstraint::Traceless,
    );
    let id3 = DMatrix::<f64>::identity(3, 3);
    let full = integrate_g_structure(&y, &id3, 0.0, 2.0, 1e-3).map_err(|e| e.to_string())?;
    let drift = full.values.iter().map(|g| (g.determinant() - 1.0).abs()).fold(0.0, f64::max);
    ensure(drift < DET_TOL, format!("det drift {drift:e}"))?;

    let first = integrate_g_structure(&y, &id3, 0.0, 1.0, 1e-3).map_err(|e| e.to_string())?;
    let second = integrate_g_structure(&y, first.values.last().unwrap(), 1.0, 2.0, 1e-3).map_err(|e| e.to_string())?;
    let comp = (second.values.last().unwrap() - full.values.last().unwrap()).amax();
    ensure(comp < FLOW_TOL, format!("composition error {comp:e}"))?;
    Ok(format!("closed {closed:.1e}, det {drift:.1e}, composition {comp:.1e}"))
}

fn c11_superposition() -> Check {
    let a = t_path(&[&["0", "-1"], &["1", "0"]], AlgebraConstraint::None);
    let two_pi = 2.0 * std::f64::consts::PI;
    let b = DVector::from_vec(vec![0.7, -1.3]);
    let parts = (0..2)
        .map(|i| solve_linear(&a, &DVector::from_fn(2, |r, _| if r == i { 1.0 } else { 0.0 }), 0.0, two_pi, 1e-3))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let sup = superposition_solve(&parts, &b).map_err(|e| e.to_string())?;
    let direct = solve_linear(&a, &b, 0.0, two_pi, 1e-3).map_err(|e| e.to_string())?;
    let err = sup.values.iter().zip(&direct.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    ensure(err < SUPERPOSE_TOL, format!("error {err:e}"))?;
    Ok(format!("max error {err:.1e}"))
}

fn median_dimension(f: &str) -> Result<usize, String> {
    let f = parse_default(f).unwrap();
    let base = [0.7, 0.3, 0.4];
    let offsets =
        [[0.0, 0.0, 0.0], [0.11, -0.07, 0.05], [-0.05, 0.13, -0.09], [0.08, 0.04, 0.12], [-0.1, -0.06, -0.04]];
    let mut dims = offsets
        .iter()
        .map(|o| {
            symmetry_dimension_estimate(&f, [base[0] + o[0], base[1] + o[1], base[2] + o[2]], 3, 1e-7)
                .map(|e| e.dimension)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    dims.sort();
    Ok(dims[2])
}

fn c12_symmetry() -> Check {
    let got = [median_dimension("0")?, median_dimension("exp(-z)")?, median_dimension("exp(-z) + z^4")?];
    ensure(got == [8, 3, 2], format!("dimensions {got:?}"))?;
    Ok("8, 3, 2".into())
}

fn c13_invariance() -> Check {
    let reps: [(&str, Assumptions, Family); 9] = [
        ("z^4", Assumptions::new(), Family::A3),
        ("(1+z^2)^(3/2)*exp(-atan(z))", Assumptions::new(), Family::B3),
        ("exp(-z)", Assumptions::new(), Family::C3),
        ("(z^3 - z)/(2*x)", Assumptions::new(), Family::DPlus),
        ("(-z^3 - z)/(2*x)", Assumptions::new(), Family::DMinus),
        ("(z*(1-z^2) + 2*(z^2-1)^(3/2))/x", z_box(r(11, 10), r(2, 1)), Family::EPlus),
        ("(z*(1-z^2) + 2*(1-z^2)^(3/2))/x", z_box(r(1, 10), r(9, 10)), Family::EMinus),
        ("(z*(1+z^2) + 2*(1+z^2)^(3/2))/x", Assumptions::new(), Family::F3),
        ("(2*(1+z^2)*(x*z-y) + 2*(1+z^2)^(3/2))/(1+x^2+y^2)", Assumptions::new(), Family::G3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let factor = |rng: &mut ChaCha8Rng| {
        let v = r(rng.random_range(4i64..=16), 8);
        if rng.random_bool(0.5) {
            -v
        } else {
            v
        }
    };
    for (src, asm, fam) in &reps {
        let f = parse_default(src).unwrap();
        let base = classify(&f, asm, &quick()).map_err(|e| e.to_string())?;
        ensure(base.family == *fam, format!("{src}: untransformed family {:?}", base.family))?;
        for _ in 0..3 {
            let t = if rng.random_bool(0.5) {
                PointTransform::Translate {
                    dx: r(rng.random_range(-8i64..=8), 4),
                    dy: r(rng.random_range(-8i64..=8), 4),
                }
            } else {
                PointTransform::Scale { lambda: factor(&mut rng), mu: factor(&mut rng) }
            };
            let rep = classify(&t.apply_to_equation(&f), &t.apply_to_assumptions(asm), &quick())
                .map_err(|e| format!("{src} under {t:?}: {e}"))?;
            ensure(rep.family == *fam, format!("{src} under {t:?}: {:?}", rep.family))?;
        }
    }
    Ok("9 representatives x 3 transforms".into())
}

fn c14_self_tests() -> Check {
    let asm = Assumptions::new();
    for src in ["exp(-z)", "x*z^3 + y^2*z + exp(x)*z^4", "y*exp(z) + x^2", "z^4 + x*y", "sin(y)*z^2 + x*z^5"] {
        let f = parse_default(src).unwrap();
        let conn = connection_matrix(&f);
        let s = curvature_scalars(&f);
        let func = EquivariantFunction { value: vec![s.a.clone(), s.d.clone()], actions: ad_actions() };
        let cov = covariant_derivative(&func, &conn, &f);
        ensure(is_zero(&(&cov[1][0] - &s.b), &asm) == TriBool::Zero, format!("{src}: b != u2* a"))?;
        ensure(is_zero(&(&cov[0][1] + &s.c), &asm) == TriBool::Zero, format!("{src}: c != -u1* d"))?;
        let (w11, w22, w33) = (conn.entry(1, 1), conn.entry(2, 2), conn.entry(3, 3));
        for k in 0..3 {
            let tr = w11.c[k].clone() + w22.c[k].clone() + w33.c[k].clone();
            ensure(is_zero(&tr, &asm) == TriBool::Zero, format!("{src}: trace component {k}"))?;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let mut g = || GroupElement {
            x: rng.random_range(0.5..2.0),
            y: rng.random_range(0.5..2.0),
            z: rng.random_range(0.5..2.0),
            t: rng.random_range(-1.0..1.0),
            u: rng.random_range(-1.0..1.0),
            v: rng.random_range(-1.0..1.0),
        };
        let (a, b) = (g(), g());
        let err = (a.compose(&b).rho() - a.rho() * b.rho()).abs().max();
        ensure(err < SELF_TEST, format!("rho homomorphism error {err:e}"))?;
    }
    Ok("covariant identities, trace-free connection, rho".into())
}

fn line(text: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

#[test]
fn acceptance() {
    type Criterion = (&'static str, fn() -> Check, Option<Duration>);
    let criteria: [Criterion; 14] = [
        ("flatness", c1_flatness, Some(Duration::from_secs(1))),
        ("power-law invariants", c2_power_law, Some(Duration::from_secs(30))),
        ("I1 lookup 3b/3c", c3_i1_lookup, None),
        ("I2 lookup 3a/3b", c4_i2_lookup, None),
        ("3e parameter law", c5_parameter_law, None),
        ("degenerate branch", c6_degenerate, None),
        ("projective roundtrip", c7_roundtrip, Some(Duration::from_secs(10))),
        ("development straightness", c8_straightness, Some(Duration::from_secs(20))),
        ("frobenius", c9_frobenius, None),
        ("g-structure integration", c10_g_structure, None),
        ("superposition", c11_superposition, None),
        ("symmetry dimensions", c12_symmetry, Some(Duration::from_secs(60))),
        ("invariance suite", c13_invariance, None),
        ("consistency self-tests", c14_self_tests, None),
    ];
    let mut failed = Vec::new();
    for (i, (name, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if took > *l => Err(format!("runtime {took:.2?} over {l:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => line(format!("PASS {:>2} {name}: {detail} ({took:.2?})", i + 1)),
            Err(why) => {
                line(format!("FAIL {:>2} {name}: {why} ({took:.2?})", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
