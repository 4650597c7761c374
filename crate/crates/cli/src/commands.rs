//! One function per subcommand, each producing a report and optional CSV.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use nalgebra::{DMatrix, DVector, Vector3};
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use sode::cartan::{curvature_scalars, ScalarVanishing};
use sode::classify::{self, ClassifyError, ClassifyOptions};
use sode::distribution::{
    frobenius_forms, in_span, integrate_g_structure, lie_bracket, solve_linear, superposition_solve, AlgebraConstraint,
    DistributionSpec, MatrixPath,
};
use sode::projective::{
    build_projective_connection, develop_curve, develop_geodesic, geodesic_equation, max_collinearity, DevelopedCurve,
    PlaneCurve, PlaneForm,
};
use sode::serial::rational_to_string;
use sode::symbolic::{cubic_coefficients, is_zero, Assumptions, Chart, CubicForm, Point, TriBool};

use crate::input::{
    build_assumptions, parse_cubic, parse_expr, parse_floats, parse_matrix, read_distribution, read_numeric_csv,
};
use crate::report::{AssumptionsReport, Report};

fn rational_to_f64(r: &sode::Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Internal(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

pub type Outcome = Result<(Report, Option<String>), Failure>;

/// Settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct Globals {
    pub seed: u64,
    pub tol: f64,
    pub samples: usize,
    pub assume: Vec<String>,
    pub boxes: Vec<String>,
}

impl Globals {
    fn assumptions(&self, chart: &Chart) -> anyhow::Result<Assumptions> {
        build_assumptions(self.seed, &self.boxes, &self.assume, chart)
    }

    fn envelope(
        &self,
        command: &'static str,
        input: Value,
        a: Option<&Assumptions>,
        vars: &[&str],
        result: Value,
    ) -> Report {
        let mut r = Report::new(command, input, self.seed, result);
        r.assumptions = a.map(|a| AssumptionsReport::new(a, &self.assume, vars));
        r
    }
}

fn tribool(t: TriBool) -> &'static str {
    match t {
        TriBool::Zero => "zero",
        TriBool::NonZero => "nonzero",
        TriBool::Unknown => "unknown",
    }
}

pub fn classify(g: &Globals, expr: &str, dimension: bool) -> Outcome {
    let chart = Chart::default();
    let f = parse_expr(expr, &chart)?;
    let a = g.assumptions(&chart)?;
    let opts = ClassifyOptions { points: g.samples, tol: g.tol, estimate_dimension: dimension };
    let rep = match classify::classify(&f, &a, &opts) {
        Ok(r) => r,
        Err(ClassifyError::Normalization(e)) => return Err(Failure::Internal(e.into())),
        Err(e) => return Err(Failure::Usage(e.into())),
    };
    let warnings = rep.warnings.clone();
    let mut r = g.envelope("classify", json!(expr), Some(&a), &["x", "y", "z"], serde_json::to_value(&rep)?);
    r.warnings = warnings;
    Ok((r, None))
}

pub fn invariants(g: &Globals, expr: &str) -> Outcome {
    let chart = Chart::default();
    let f = parse_expr(expr, &chart)?;
    let a = g.assumptions(&chart)?;
    let s = curvature_scalars(&f);
    let v = ScalarVanishing::of(&s, &a);
    let named = [("a", &s.a, v.a), ("b", &s.b, v.b), ("c", &s.c, v.c), ("d", &s.d, v.d)];
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for p in classify::sample_points(&f, &a, g.samples) {
        let at = Point::from_pairs(&[
            ("x", rational_to_f64(&p[0])),
            ("y", rational_to_f64(&p[1])),
            ("z", rational_to_f64(&p[2])),
        ]);
        let mut values = serde_json::Map::new();
        for (n, e, _) in &named {
            match e.eval(&at) {
                Ok(ev) => values.insert(n.to_string(), json!(ev.value)),
                Err(err) => {
                    warnings.push(format!("{n} at sample point: {err}"));
                    values.insert(n.to_string(), Value::Null)
                }
            };
        }
        points.push(json!({"point": p.iter().map(rational_to_string).collect::<Vec<_>>(), "values": values}));
    }
    for (n, _, t) in &named {
        if *t == TriBool::Unknown {
            warnings.push(format!("is_zero({n}) is undecided"));
        }
    }
    let scalars: serde_json::Map<String, Value> =
        named.iter().map(|(n, e, _)| (n.to_string(), json!(e.to_string()))).collect();
    let vanishing: serde_json::Map<String, Value> =
        named.iter().map(|(n, _, t)| (n.to_string(), json!(tribool(*t)))).collect();
    let result = json!({"scalars": scalars, "vanishing": vanishing, "flags": v.flags(), "points": points});
    let mut r = g.envelope("invariants", json!(expr), Some(&a), &["x", "y", "z"], result);
    r.warnings = warnings;
    Ok((r, None))
}

fn form_json(f: &PlaneForm) -> Value {
    json!({"dx": f.dx.to_string(), "dy": f.dy.to_string()})
}

fn cubic_json(c: &CubicForm) -> Value {
    json!({"A": c.a.to_string(), "B": c.b.to_string(), "C": c.c.to_string(), "D": c.d.to_string()})
}

fn cubic_from(g: &Globals, expr: Option<&str>, cubic: Option<&str>) -> Result<(CubicForm, Value), Failure> {
    match (expr, cubic) {
        (Some(e), None) => {
            let chart = Chart::default();
            let f = parse_expr(e, &chart)?;
            let a = g.assumptions(&chart)?;
            let c = cubic_coefficients(&f, &a)?.ok_or_else(|| anyhow!("the right-hand side is not cubic in p"))?;
            Ok((c, json!(e)))
        }
        (None, Some(c)) => Ok((parse_cubic(c)?, json!({"cubic": c}))),
        (None, None) => Ok((parse_cubic("0,0,0,0")?, json!({"cubic": "0,0,0,0"}))),
        (Some(_), Some(_)) => Err(Failure::Usage(anyhow!("give either an equation or --cubic, not both"))),
    }
}

pub fn projective(g: &Globals, expr: Option<&str>, cubic: Option<&str>) -> Outcome {
    let (c, input) = cubic_from(g, expr, cubic)?;
    let conn = build_projective_connection(&c);
    let back = geodesic_equation(&conn);
    let a = g.assumptions(&Chart::default())?;
    let roundtrip: Vec<TriBool> =
        c.coefficients().iter().zip(back.coefficients()).map(|(u, v)| is_zero(&(*u - v), &a)).collect();
    let mut r = g.envelope(
        "projective",
        input,
        None,
        &[],
        json!({
            "cubic": cubic_json(&c),
            "connection": {
                "w11": form_json(&conn.w11),
                "w12": form_json(&conn.w12),
                "w21": form_json(&conn.w21),
                "w22": form_json(&conn.w22()),
                "w1": form_json(&conn.w1),
                "w2": form_json(&conn.w2),
            },
            "geodesic_equation": cubic_json(&back),
            "roundtrip": roundtrip.iter().map(|t| tribool(*t)).collect::<Vec<_>>(),
        }),
    );
    if roundtrip.iter().any(|t| *t != TriBool::Zero) {
        r.warnings.push("geodesic equation does not reproduce the input coefficients".into());
    }
    Ok((r, None))
}

/// Curve sources for `develop`.
#[derive(Clone, Debug, Default)]
pub struct CurveArgs {
    pub curve: Option<PathBuf>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub geodesic: Option<String>,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

/// At most `k` evenly spaced indices.
fn spread(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    (0..k).map(|i| i * (n - 1) / (k - 1)).collect()
}

fn developed_csv(d: &DevelopedCurve<f64>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "p0", "p1", "p2"]).expect("in-memory csv");
    for (t, p) in d.times.iter().zip(&d.points) {
        w.write_record([t, &p[0], &p[1], &p[2]].iter().map(|v| format!("{v:.15e}"))).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

pub fn develop(g: &Globals, cubic: Option<&str>, args: &CurveArgs) -> Outcome {
    let (c, _) = cubic_from(g, None, cubic)?;
    let conn = build_projective_connection(&c);
    let tchart = Chart::new(&["t"]);
    let (dev, source) = match (&args.curve, &args.x, &args.y, &args.geodesic) {
        (Some(path), None, None, None) => {
            let rows = read_numeric_csv(path)?;
            let triples = rows
                .iter()
                .map(|r| match r.as_slice() {
                    [t, x, y, ..] => Ok((*t, *x, *y)),
                    _ => Err(anyhow!("curve rows need t, x, y")),
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let curve = PlaneCurve::from_positions(&triples)?;
            let (lo, hi) = curve.span().expect("sampled curve");
            (develop_curve(&conn, &curve, lo, hi, args.step), json!({"file": path.display().to_string()}))
        }
        (None, Some(x), Some(y), None) => {
            let curve = PlaneCurve::Closed { x: parse_expr(x, &tchart)?, y: parse_expr(y, &tchart)? };
            (develop_curve(&conn, &curve, args.t0, args.t1, args.step), json!({"x": x, "y": y}))
        }
        (None, None, None, Some(start)) => {
            let s = parse_floats(start)?;
            let [x0, y0, p0] = s.as_slice() else { return Err(Failure::Usage(anyhow!("--geodesic takes x0,y0,p0"))) };
            let end = if args.t1 > *x0 { args.t1 } else { x0 + 0.5 };
            (develop_geodesic(&conn, [*x0, *y0, *p0], end, args.step), json!({"geodesic": [x0, y0, p0], "until": end}))
        }
        _ => return Err(Failure::Usage(anyhow!("give one curve: --curve FILE, --x and --y, or --geodesic x0,y0,p0"))),
    };
    let dev = dev?;
    let picks: Vec<Vector3<f64>> = spread(dev.points.len(), 21).into_iter().map(|i| dev.points[i]).collect();
    let drift = dev.frames.iter().map(|h| (h.determinant() - 1.0).abs()).fold(0.0, f64::max);
    let last = dev.points.last().expect("at least the start point");
    let result = json!({
        "cubic": cubic_json(&c),
        "curve": source,
        "steps": dev.times.len() - 1,
        "max_collinearity": max_collinearity(&picks),
        "collinearity_points": picks.len(),
        "max_det_drift": drift,
        "end_point": [last[0], last[1], last[2]],
    });
    let r = g.envelope("develop", json!({"cubic": cubic.unwrap_or("0,0,0,0")}), None, &[], result);
    Ok((r, Some(developed_csv(&dev))))
}

pub fn frobenius(g: &Globals, file: &Path) -> Outcome {
    let df = read_distribution(file)?;
    let spec = df.spec()?;
    let chart = df.chart();
    let a = g.assumptions(&chart)?;
    let names: Vec<String> = chart.vars().iter().map(|v| v.name().to_string()).collect();
    let mut details = Vec::new();
    let mut verdicts = Vec::new();
    match &spec {
        DistributionSpec::Forms { forms, .. } => {
            for (i, top) in frobenius_forms(&chart, forms).iter().enumerate() {
                for (idx, c) in top.terms() {
                    let t = is_zero(c, &a);
                    verdicts.push(t);
                    if t != TriBool::Zero {
                        let basis: Vec<String> = idx.iter().map(|k| format!("d{}", names[*k])).collect();
                        details.push(json!({"form": i, "component": basis.join("^"), "coefficient": c.to_string(), "test": tribool(t)}));
                    }
                }
            }
        }
        DistributionSpec::Generators(gens) => {
            for i in 0..gens.len() {
                for j in i + 1..gens.len() {
                    let br = lie_bracket(&gens[i], &gens[j])?;
                    let t = in_span(&br, gens, &a);
                    verdicts.push(t);
                    if t != TriBool::Zero {
                        details.push(json!({"pair": [i, j], "bracket": br.to_string(), "test": tribool(t)}));
                    }
                }
            }
        }
    }
    let verdict = if verdicts.contains(&TriBool::NonZero) {
        "not integrable"
    } else if verdicts.contains(&TriBool::Unknown) {
        "unknown"
    } else {
        "integrable"
    };
    let mut r = g.envelope(
        "frobenius",
        json!({"file": file.display().to_string()}),
        Some(&a),
        &names.iter().map(String::as_str).collect::<Vec<_>>(),
        json!({"verdict": verdict, "witnesses": details}),
    );
    if verdict == "unknown" {
        r.warnings.push("some zero tests were undecided; see witnesses".into());
    }
    Ok((r, None))
}

pub fn symmetry_dim(g: &Globals, expr: &str, point: Option<&str>, order: usize) -> Outcome {
    let chart = Chart::default();
    let f = parse_expr(expr, &chart)?;
    let a = g.assumptions(&chart)?;
    let p: [f64; 3] = match point {
        Some(s) => {
            let v = parse_floats(s)?;
            v.as_slice().try_into().map_err(|_| anyhow!("--point takes x,y,p"))?
        }
        None => {
            let pts = classify::sample_points(&f, &a, 1);
            let p = pts.first().ok_or_else(|| anyhow!("no usable sample point in the box"))?;
            [rational_to_f64(&p[0]), rational_to_f64(&p[1]), rational_to_f64(&p[2])]
        }
    };
    let est = classify::symmetry_dimension_median(&f, p, order, 1e-7)?;
    let mut r =
        g.envelope("symmetry-dim", json!(expr), Some(&a), &["x", "y", "z"], json!({"point": p, "estimate": est}));
    if !est.stabilized {
        r.warnings.push(format!("rank did not stabilize; dimension <= {}", est.dimension));
    }
    Ok((r, None))
}

/// Matrix path sources for `g-integrate` and `superpose`.
#[derive(Clone, Debug, Default)]
pub struct PathArgs {
    pub matrix: Option<String>,
    pub csv: Option<PathBuf>,
    pub traceless: bool,
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
}

fn matrix_path(args: &PathArgs) -> Result<(MatrixPath<f64>, Value), Failure> {
    let constraint = if args.traceless { AlgebraConstraint::Traceless } else { AlgebraConstraint::None };
    match (&args.matrix, &args.csv) {
        (Some(m), None) => Ok((MatrixPath::closed(parse_matrix(m)?, constraint)?, json!({"matrix": m}))),
        (None, Some(path)) => {
            let rows = read_numeric_csv(path)?;
            let width = rows.first().map(|r| r.len()).unwrap_or(0);
            let n = ((width.saturating_sub(1)) as f64).sqrt().round() as usize;
            if n == 0 || n * n + 1 != width || rows.iter().any(|r| r.len() != width) {
                return Err(Failure::Usage(anyhow!("matrix CSV rows must be t followed by n*n entries")));
            }
            let times = rows.iter().map(|r| r[0]).collect();
            let mats = rows.iter().map(|r| DMatrix::from_row_slice(n, n, &r[1..])).collect();
            Ok((MatrixPath::sampled(times, mats, constraint)?, json!({"file": path.display().to_string()})))
        }
        _ => Err(Failure::Usage(anyhow!("give exactly one of --matrix or --csv"))),
    }
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn g_integrate(g: &Globals, args: &PathArgs, g0: Option<&str>) -> Outcome {
    let (path, input) = matrix_path(args)?;
    let n = path.size();
    let start = match g0 {
        Some(s) => {
            let rows = parse_matrix(s)?;
            let vals: Vec<f64> = rows.iter().flatten().map(|e| e.eval_f64(&[])).collect::<Result<_, _>>()?;
            if rows.len() != n || vals.len() != n * n {
                return Err(Failure::Usage(anyhow!("--g0 must be {n}x{n}")));
            }
            DMatrix::from_row_slice(n, n, &vals)
        }
        None => DMatrix::identity(n, n),
    };
    let traj = integrate_g_structure(&path, &start, args.t0, args.t1, args.step)?;
    let det0 = start.determinant();
    let drift = traj.values.iter().map(|m| (m.determinant() - det0).abs()).fold(0.0, f64::max);
    let end = traj.values.last().expect("start value");
    let mut w = csv::Writer::from_writer(Vec::new());
    for (t, m) in traj.times.iter().zip(&traj.values) {
        let mut rec = vec![format!("{t:.15e}")];
        rec.extend(m.transpose().iter().map(|v| format!("{v:.15e}")));
        w.write_record(&rec).expect("in-memory csv");
    }
    let csv_text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8");
    let result = json!({
        "size": n,
        "steps": traj.times.len() - 1,
        "end": matrix_json(end),
        "det_end": end.determinant(),
        "max_det_drift": drift,
    });
    Ok((g.envelope("g-integrate", input, None, &[], result), Some(csv_text)))
}

pub fn superpose(g: &Globals, args: &PathArgs, b: &str) -> Outcome {
    let (path, input) = matrix_path(args)?;
    let n = path.size();
    let bv = DVector::from_vec(parse_floats(b)?);
    if bv.len() != n {
        return Err(Failure::Usage(anyhow!("--b needs {n} entries")));
    }
    let parts = (0..n)
        .map(|i| {
            solve_linear(
                &path,
                &DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }),
                args.t0,
                args.t1,
                args.step,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sup = superposition_solve(&parts, &bv)?;
    let direct = solve_linear(&path, &bv, args.t0, args.t1, args.step)?;
    let err = sup.values.iter().zip(&direct.values).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    let mut w = csv::Writer::from_writer(Vec::new());
    for (t, v) in sup.times.iter().zip(&sup.values) {
        let mut rec = vec![format!("{t:.15e}")];
        rec.extend(v.iter().map(|x| format!("{x:.15e}")));
        w.write_record(&rec).expect("in-memory csv");
    }
    let csv_text = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8");
    let end = sup.values.last().expect("start value");
    let result = json!({
        "size": n,
        "steps": sup.times.len() - 1,
        "end": end.iter().copied().collect::<Vec<f64>>(),
        "max_error_vs_direct": err,
    });
    Ok((g.envelope("superpose", input, None, &[], result), Some(csv_text)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn globals() -> Globals {
        Globals { seed: 0, tol: 1e-8, samples: 5, assume: Vec::new(), boxes: Vec::new() }
    }

    fn ok(o: Outcome) -> Report {
        match o {
            Ok((r, _)) => r,
            Err(Failure::Usage(e)) | Err(Failure::Internal(e)) => panic!("{e}"),
        }
    }

    #[test]
    fn invariants_of_quartic() {
        let r = ok(invariants(&globals(), "p^4"));
        assert_eq!(r.result["scalars"]["d"], json!("-4"));
        let r = ok(invariants(&globals(), "0"));
        for k in ["a", "b", "c", "d"] {
            assert_eq!(r.result["vanishing"][k], json!("zero"));
        }
    }

    #[test]
    fn spread_covers_ends() {
        assert_eq!(spread(5, 21), vec![0, 1, 2, 3, 4]);
        let s = spread(1001, 21);
        assert_eq!((s[0], s[20]), (0, 1000));
    }

    #[test]
    fn parse_errors_are_usage() {
        assert!(matches!(classify(&globals(), "exp(", false), Err(Failure::Usage(_))));
    }
}
