//! Parsing of command-line values and input files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use serde::Deserialize;
use sode::distribution::{DistributionSpec, VectorField};
use sode::forms::Form;
use sode::serial::rational_from_str;
use sode::symbolic::expr::rational_from_f64;
use sode::symbolic::{parse, Assumptions, Chart, CubicForm, Expr};
use sode::Rational;

/// Exact value of `"3"`, `"-1/2"`, `"0.125"`; other float syntax goes through its binary value.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some(r) = rational_from_str(s) {
        return Ok(r);
    }
    if let Some((int, frac)) = s.split_once('.') {
        if !frac.is_empty() && frac.bytes().all(|b| b.is_ascii_digit()) {
            let (neg, digits) = match int.strip_prefix('-') {
                Some(rest) => (true, rest),
                None => (false, int.strip_prefix('+').unwrap_or(int)),
            };
            if digits.bytes().all(|b| b.is_ascii_digit()) {
                let n: BigInt = format!("{digits}{frac}").parse()?;
                let r = Rational::new(n, BigInt::from(10).pow(frac.len() as u32));
                return Ok(if neg { -r } else { r });
            }
        }
    }
    let v: f64 = s.parse().map_err(|_| anyhow!("not a number: {s}"))?;
    rational_from_f64(v).ok_or_else(|| anyhow!("not a finite number: {s}"))
}

/// `x:1/2,2`.
pub fn parse_box(spec: &str) -> Result<(String, Rational, Rational)> {
    let (var, range) = spec.split_once(':').ok_or_else(|| anyhow!("box must look like var:lo,hi, got {spec}"))?;
    let (lo, hi) = range.split_once(',').ok_or_else(|| anyhow!("box must look like var:lo,hi, got {spec}"))?;
    Ok((var.trim().to_string(), parse_rational(lo)?, parse_rational(hi)?))
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("not a number: {v}"))).collect()
}

pub fn build_assumptions(seed: u64, boxes: &[String], relations: &[String], chart: &Chart) -> Result<Assumptions> {
    let mut a = Assumptions::new().with_seed(seed);
    for b in boxes {
        let (var, lo, hi) = parse_box(b)?;
        a.set_interval(&var, lo, hi)?;
    }
    for r in relations {
        a.assume(r, chart)?;
    }
    Ok(a)
}

pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr> {
    parse(text, chart).map_err(|e| {
        let pad = " ".repeat(e.offset());
        anyhow!("{e}\n  {text}\n  {pad}^")
    })
}

/// `"A,B,C,D"` as expressions in `x, y`.
pub fn parse_cubic(text: &str) -> Result<CubicForm> {
    let chart = Chart::new(&["x", "y"]);
    let parts: Vec<&str> = text.split(',').collect();
    let [a, b, c, d] = parts.as_slice() else {
        bail!("cubic coefficients must be four comma-separated expressions A,B,C,D");
    };
    Ok(CubicForm::new(parse_expr(a, &chart)?, parse_expr(b, &chart)?, parse_expr(c, &chart)?, parse_expr(d, &chart)?))
}

/// Rows separated by `;`, entries by `,`, expressions in `t`.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<Expr>>> {
    let chart = Chart::new(&["t"]);
    text.split(';').map(|row| row.split(',').map(|e| parse_expr(e, &chart)).collect::<Result<Vec<_>>>()).collect()
}

/// CSV rows of numbers, skipping a header line that does not parse.
pub fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}: row {} is not numeric", path.display(), i + 1),
        }
    }
    Ok(rows)
}

/// Distribution file: `{"chart": [...], "generators": [[...]]}` or `{"chart": [...], "forms": [[...]]}`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    #[serde(default = "default_chart")]
    pub chart: Vec<String>,
    #[serde(default)]
    pub generators: Vec<Vec<String>>,
    #[serde(default)]
    pub forms: Vec<Vec<String>>,
}

fn default_chart() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

impl DistributionFile {
    pub fn chart(&self) -> Chart {
        let names: Vec<&str> = self.chart.iter().map(String::as_str).collect();
        Chart::new(&names)
    }

    pub fn spec(&self) -> Result<DistributionSpec> {
        let chart = self.chart();
        let row = |r: &Vec<String>| -> Result<Vec<Expr>> {
            if r.len() != chart.dim() {
                bail!("expected {} components, found {}", chart.dim(), r.len());
            }
            r.iter().map(|e| parse_expr(e, &chart)).collect()
        };
        match (self.generators.is_empty(), self.forms.is_empty()) {
            (false, true) => Ok(DistributionSpec::Generators(
                self.generators.iter().map(|g| Ok(VectorField::new(chart.clone(), row(g)?)?)).collect::<Result<_>>()?,
            )),
            (true, false) => Ok(DistributionSpec::Forms {
                chart: chart.clone(),
                forms: self.forms.iter().map(|f| Ok(Form::one_form(&row(f)?))).collect::<Result<_>>()?,
            }),
            _ => bail!("give exactly one of \"generators\" or \"forms\""),
        }
    }
}

pub fn read_distribution(path: &Path) -> Result<DistributionFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not a distribution file", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.1").unwrap(), Rational::new(1.into(), 10.into()));
        assert_eq!(parse_rational("-1.25").unwrap(), Rational::new((-5).into(), 4.into()));
        assert_eq!(parse_rational("3/7").unwrap(), Rational::new(3.into(), 7.into()));
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn box_spec() {
        let (v, lo, hi) = parse_box("z:1/10, 0.9").unwrap();
        assert_eq!(v, "z");
        assert_eq!(lo, Rational::new(1.into(), 10.into()));
        assert_eq!(hi, Rational::new(9.into(), 10.into()));
    }
}
