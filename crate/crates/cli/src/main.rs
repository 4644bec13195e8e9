use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pencil_dilate_core::factorization::factorization_residual_at;
use pencil_dilate_core::io::{read_pencil, DilationFile, DilationKind};
use pencil_dilate_core::linalg::CMatrix;
use pencil_dilate_core::pencil::{classify, unit_circle_grid};
use pencil_dilate_core::unidil::{theta_unitarity_residual, unitarity_residual_at};
use pencil_dilate_core::verify::{construct, demo, run_padded_pipeline, run_pipeline};
use pencil_dilate_core::{DemoName, DilationError, PipelineOptions, Report, ToleranceProfile};

const THREADS_ENV: &str = "PENCIL_DILATE_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "pencil-dilate",
    version,
    about = "Minimal isometric and unitary dilations of linear pencils T0 + λT1"
)]
struct Cli {
    #[command(flatten)]
    tol: ToleranceArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify a pencil as unitary, isometric, contractive or not contractive.
    Classify {
        path: PathBuf,
        /// Classification tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Build the canonical minimal dilation and write its blocks as JSON.
    Dilate {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Isometric)]
        kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full construction and every check.
    Verify {
        path: PathBuf,
        /// Word depth of the minimality tests.
        #[arg(long, default_value_t = 4)]
        depth: usize,
        /// Longest word in the dilation and uniformity checks.
        #[arg(long, default_value_t = 6)]
        word_len: usize,
        /// Print the reports as a JSON array.
        #[arg(long)]
        json: bool,
        /// Check the canonical dilation with an extra fixed head line instead
        /// (a dilation that is not minimal).
        #[arg(long)]
        pad: bool,
    },
    /// Reproduce a worked example and check its claims.
    Demo {
        #[arg(value_parser = parse_demo)]
        name: DemoName,
        #[arg(long)]
        json: bool,
    },
    /// Residual of one identity at each of the --grid points, as CSV.
    Residuals {
        path: PathBuf,
        #[arg(long, value_enum)]
        check: ResidualCheck,
        /// Output file; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Isometric,
    Unitary,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResidualCheck {
    Factorization,
    Unitarity,
    Theta,
}

/// Overrides for the tolerance profile; unset flags keep the defaults.
#[derive(Args, Debug, Default)]
struct ToleranceArgs {
    /// Points on the unit circle for grid tests (and rows of `residuals`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[arg(long, global = true)]
    rank_tol: Option<f64>,
    #[arg(long, global = true)]
    containment_tol: Option<f64>,
    #[arg(long, global = true)]
    classify_tol: Option<f64>,
    #[arg(long, global = true)]
    isometry_tol: Option<f64>,
    #[arg(long, global = true)]
    convergence_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    #[arg(long, global = true)]
    pinv_tol: Option<f64>,
    #[arg(long, global = true)]
    check_tol: Option<f64>,
    #[arg(long, global = true)]
    unitarity_tol: Option<f64>,
    #[arg(long, global = true)]
    factorization_tol: Option<f64>,
    #[arg(long, global = true)]
    minimality_rank_tol: Option<f64>,
    #[arg(long, global = true)]
    word_cap: Option<usize>,
}

impl ToleranceArgs {
    fn profile(&self) -> ToleranceProfile {
        let mut p = ToleranceProfile::default();
        macro_rules! set {
            ($($field:ident <- $arg:ident),* $(,)?) => {
                $(if let Some(v) = self.$arg { p.$field = v; })*
            };
        }
        set!(
            grid <- grid,
            rank <- rank_tol,
            containment <- containment_tol,
            classify <- classify_tol,
            isometry <- isometry_tol,
            convergence <- convergence_tol,
            max_iter <- max_iter,
            pinv <- pinv_tol,
            check <- check_tol,
            unitarity <- unitarity_tol,
            factorization <- factorization_tol,
            minimality_rank <- minimality_rank_tol,
            word_cap <- word_cap,
        );
        p
    }
}

fn parse_demo(s: &str) -> Result<DemoName, String> {
    s.parse::<DemoName>().map_err(|e| {
        let names: Vec<&str> = DemoName::ALL.iter().map(|d| d.as_str()).collect();
        format!("{e}; expected one of {}", names.join(", "))
    })
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Input(String),
    Math(String),
}

impl From<DilationError> for Failure {
    fn from(e: DilationError) -> Self {
        use DilationError::*;
        match e {
            Parse(_) | ShapeMismatch(_) | DimensionMismatch(_) | NonFinite | InvalidArgument(_) | CapExceeded { .. } => {
                Failure::Input(e.to_string())
            }
            NoConvergence { iterations, residual } => Failure::Math(format!(
                "{e}; the boundary-singular case converges slowly, try a larger --max-iter (ran {iterations}, residual {residual:.3e})"
            )),
            _ => Failure::Math(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let profile = cli.tol.profile();
    let outcome = match cli.command {
        Command::Classify { path, tol } => cmd_classify(&path, tol, &profile),
        Command::Dilate { path, kind, out } => cmd_dilate(&path, kind, out.as_deref(), &profile),
        Command::Verify {
            path,
            depth,
            word_len,
            json,
            pad,
        } => {
            let opts = PipelineOptions {
                depth,
                word_len,
                ..PipelineOptions::default()
            };
            cmd_verify(&path, &opts, json, pad, &profile)
        }
        Command::Demo { name, json } => cmd_demo(name, json, &profile),
        Command::Residuals { path, check, csv } => {
            cmd_residuals(&path, check, csv.as_deref(), &profile)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Math(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got '{raw}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn cmd_classify(path: &Path, tol: Option<f64>, profile: &ToleranceProfile) -> CmdResult {
    let p = read_pencil(path)?;
    let class = classify(&p, profile.grid, tol.unwrap_or(profile.classify))?;
    println!("{class}");
    Ok(class.is_contractive())
}

fn fmt_matrix(m: &CMatrix) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            let cells: Vec<String> = r
                .iter()
                .map(|z| {
                    if z.im.abs() < 1e-12 {
                        format!("{:.6}", z.re)
                    } else {
                        format!("{:.6}{:+.6}i", z.re, z.im)
                    }
                })
                .collect();
            cells.join(", ")
        })
        .collect();
    format!("[{}]", rows.join("; "))
}

fn cmd_dilate(
    path: &Path,
    kind: Kind,
    out: Option<&Path>,
    profile: &ToleranceProfile,
) -> CmdResult {
    let t = read_pencil(path)?;
    let c = construct(&t, profile)?;
    let f = &c.factor;
    println!("dimH = {}", t.cols());
    println!("dimY = {}", f.dim_y());
    if f.dim_y() == 0 {
        println!("isometric input: dilation equals input");
    } else if t.cols() <= 4 {
        println!("F0 = {}", fmt_matrix(&f.f0));
        println!("F1 = {}", fmt_matrix(&f.f1));
    }
    let core = c.isometric.core();
    println!("isometric core: {}x{}", core.rows(), core.cols());
    let file_kind = match kind {
        Kind::Isometric => DilationKind::Isometric,
        Kind::Unitary => {
            let u = &c.unitary;
            println!("dimU = {}", u.dim_u());
            println!(
                "unitary core: {}x{} (dim K1 = {}, dim L = {})",
                u.core_block(0).nrows(),
                u.core_block(0).ncols(),
                u.cores().k1.dim(),
                u.cores().l.dim()
            );
            DilationKind::Unitary
        }
    };
    if c.is_classical() && c.lambda_dependence() <= 1e-12 {
        println!("classical Sz.-Nagy case: λ-independent");
    }
    if !c.outer.outer {
        println!("warning: factor failed the outer root check");
    }
    if let Some(out) = out {
        let json = serde_json::to_string_pretty(&DilationFile::from_construction(&c, file_kind))
            .map_err(|e| Failure::Input(e.to_string()))?;
        fs::write(out, json + "\n")?;
        println!("wrote {}", out.display());
    }
    Ok(true)
}

fn print_reports(reports: &[Report], json: bool, notes: bool) -> Result<(), Failure> {
    if json {
        let s = serde_json::to_string_pretty(reports).map_err(|e| Failure::Input(e.to_string()))?;
        println!("{s}");
        return Ok(());
    }
    for r in reports {
        println!("{r}");
        if notes {
            for d in &r.details {
                if let Some(n) = &d.note {
                    println!("    {}: {n}", d.item);
                }
            }
        }
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed == 0 {
        println!("all {} checks pass", reports.len());
    } else {
        println!("{failed} of {} checks failed", reports.len());
    }
    Ok(())
}

fn cmd_verify(
    path: &Path,
    opts: &PipelineOptions,
    json: bool,
    pad: bool,
    profile: &ToleranceProfile,
) -> CmdResult {
    let t = read_pencil(path)?;
    let reports = if pad {
        run_padded_pipeline(&t, opts, profile)?
    } else {
        run_pipeline(&t, opts, profile)?.reports
    };
    print_reports(&reports, json, false)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn cmd_demo(name: DemoName, json: bool, profile: &ToleranceProfile) -> CmdResult {
    let reports = demo(name, profile)?;
    if !json {
        println!("demo {name}");
    }
    print_reports(&reports, json, true)?;
    Ok(reports.iter().all(|r| r.pass))
}

fn cmd_residuals(
    path: &Path,
    check: ResidualCheck,
    csv_out: Option<&Path>,
    profile: &ToleranceProfile,
) -> CmdResult {
    let points = profile.grid;
    let t = read_pencil(path)?;
    let c = construct(&t, profile)?;
    let mut rows = Vec::with_capacity(points);
    for lambda in unit_circle_grid(points) {
        let r = match check {
            ResidualCheck::Factorization => factorization_residual_at(&t, &c.factor, lambda),
            ResidualCheck::Unitarity => unitarity_residual_at(&c.unitary, lambda)?,
            ResidualCheck::Theta => theta_unitarity_residual(&c.theta, lambda),
        };
        rows.push([lambda.re, lambda.im, r]);
    }
    let sink: Box<dyn Write> = match csv_out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let csv_err = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(["lambda_re", "lambda_im", "residual"])
        .map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x:.16e}")))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(true)
}
