//! `sode`: classify second-order ODEs `y'' = f(x, y, p)` up to point transformations.

mod commands;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{CurveArgs, Failure, Globals, PathArgs};

#[derive(Debug, Parser)]
#[command(name = "sode", version, about = "Point-equivalence invariants of y'' = f(x, y, p)")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for sample points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for invariant matching.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Number of sample points.
    #[arg(long, global = true, default_value_t = 5)]
    samples: usize,
    /// Sign declaration such as "1 - p^2 > 0"; repeatable.
    #[arg(long, global = true)]
    assume: Vec<String>,
    /// Sampling interval "var:lo,hi"; repeatable.
    #[arg(long = "box", global = true)]
    boxes: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Integration {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
}

#[derive(Debug, Args)]
struct MatrixSource {
    /// Entries in t, rows separated by ';' and entries by ','.
    #[arg(long)]
    matrix: Option<String>,
    /// CSV rows t, a11, a12, ... (row-major).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Require trace zero at every sample.
    #[arg(long)]
    traceless: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the equation and estimate its symmetry dimension.
    Classify {
        expr: String,
        /// Skip the symmetry-dimension estimate.
        #[arg(long)]
        no_dimension: bool,
    },
    /// Curvature scalars a, b, c, d and their values at sample points.
    Invariants { expr: String },
    /// Projective connection of an equation cubic in p.
    Projective {
        expr: Option<String>,
        /// Coefficients "A,B,C,D" of A p^3 + B p^2 + C p + D.
        #[arg(long)]
        cubic: Option<String>,
    },
    /// Develop a plane curve into the projective plane.
    Develop {
        /// Coefficients "A,B,C,D"; the flat connection when omitted.
        #[arg(long)]
        cubic: Option<String>,
        /// CSV rows t, x, y.
        #[arg(long)]
        curve: Option<PathBuf>,
        /// x(t) for a closed-form curve.
        #[arg(long)]
        x: Option<String>,
        /// y(t) for a closed-form curve.
        #[arg(long)]
        y: Option<String>,
        /// Develop the geodesic from "x0,y0,p0" up to x = t1.
        #[arg(long, allow_hyphen_values = true)]
        geodesic: Option<String>,
        #[command(flatten)]
        span: Integration,
        /// Write the developed points as CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Frobenius integrability of a distribution given in a JSON file.
    Frobenius { file: PathBuf },
    /// Estimate the dimension of the symmetry algebra.
    SymmetryDim {
        expr: String,
        /// Working point "x,y,p".
        #[arg(long, allow_hyphen_values = true)]
        point: Option<String>,
        #[arg(long, default_value_t = 3)]
        order: usize,
    },
    /// Integrate g' = X(t) g.
    GIntegrate {
        #[command(flatten)]
        source: MatrixSource,
        #[command(flatten)]
        span: Integration,
        /// Initial matrix; the identity when omitted.
        #[arg(long, allow_hyphen_values = true)]
        g0: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve F' = A(t) F from b by superposing particular solutions.
    Superpose {
        #[command(flatten)]
        source: MatrixSource,
        #[command(flatten)]
        span: Integration,
        /// Initial vector "b1,b2,...".
        #[arg(long, allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn path_args(source: &MatrixSource, span: &Integration) -> PathArgs {
    PathArgs {
        matrix: source.matrix.clone(),
        csv: source.csv.clone(),
        traceless: source.traceless,
        t0: span.t0,
        t1: span.t1,
        step: span.step,
    }
}

fn run(cli: &Cli) -> (commands::Outcome, Option<PathBuf>) {
    let g = Globals {
        seed: cli.seed,
        tol: cli.tol,
        samples: cli.samples.max(1),
        assume: cli.assume.clone(),
        boxes: cli.boxes.clone(),
    };
    match &cli.command {
        Command::Classify { expr, no_dimension } => (commands::classify(&g, expr, !no_dimension), None),
        Command::Invariants { expr } => (commands::invariants(&g, expr), None),
        Command::Projective { expr, cubic } => (commands::projective(&g, expr.as_deref(), cubic.as_deref()), None),
        Command::Develop { cubic, curve, x, y, geodesic, span, out } => {
            let args = CurveArgs {
                curve: curve.clone(),
                x: x.clone(),
                y: y.clone(),
                geodesic: geodesic.clone(),
                t0: span.t0,
                t1: span.t1,
                step: span.step,
            };
            (commands::develop(&g, cubic.as_deref(), &args), out.clone())
        }
        Command::Frobenius { file } => (commands::frobenius(&g, file), None),
        Command::SymmetryDim { expr, point, order } => {
            (commands::symmetry_dim(&g, expr, point.as_deref(), *order), None)
        }
        Command::GIntegrate { source, span, g0, out } => {
            (commands::g_integrate(&g, &path_args(source, span), g0.as_deref()), out.clone())
        }
        Command::Superpose { source, span, b, out } => {
            (commands::superpose(&g, &path_args(source, span), b), out.clone())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (outcome, out) = run(&cli);
    match outcome {
        Ok((report, csv)) => {
            let mut stdout = std::io::stdout().lock();
            let text = if cli.json { report.to_json() + "\n" } else { report.to_text() };
            let _ = stdout.write_all(text.as_bytes());
            if let Some(csv) = csv {
                match out {
                    Some(path) => {
                        if let Err(e) = std::fs::write(&path, csv) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::from(1);
                        }
                    }
                    None if !cli.json => {
                        let _ = stdout.write_all(b"\n");
                        let _ = stdout.write_all(csv.as_bytes());
                    }
                    None => {}
                }
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(2)
        }
    }
}
