mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use refinable::evaluate::{DyadicGrid, EvalError, DEFAULT_LEVEL};
use refinable::spectral::{eigen_structure, independence_test};
use refinable::suite::analyze;
use refinable::{parse_mask, Error, Mask};
use thiserror::Error;

use report::Report;

#[derive(Parser)]
#[command(name = "refinable", version, about = "Analyze refinable functions given by a finite mask")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of T, accuracy and the independence test.
    Spectrum {
        #[command(flatten)]
        input: Input,
        /// Report file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the homogeneous basis and phi; writes h<i>.csv, phi.csv and report.json.
    Basis {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sampling: Sampling,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full residual suite; exit 1 if any residual fails.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        sampling: Sampling,
        /// Report file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Input {
    /// Mask file: {"name": ..., "coefficients": [...]}.
    mask: PathBuf,
    /// Force the rational backend; doubles are read as the rationals they represent.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct Sampling {
    /// Dyadic level of the sample grid.
    #[arg(long, default_value_t = DEFAULT_LEVEL)]
    level: u32,
    #[arg(
        long,
        num_args = 2,
        value_names = ["A", "B"],
        allow_negative_numbers = true,
        default_values_t = [-1.0, 1.0]
    )]
    interval: Vec<f64>,
    /// Override the default residual tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
}

impl Sampling {
    fn interval(&self) -> (f64, f64) {
        (self.interval[0], self.interval[1])
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Failure(String),
    #[error("{} invariant(s) failed", .0.len())]
    Invariants(Vec<String>),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) | CliError::Invariants(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let input = matches!(
            e,
            Error::Mask(_)
                | Error::Eval(
                    EvalError::NotAnEigenvalue
                        | EvalError::ZeroSum { .. }
                        | EvalError::Ambiguous { .. }
                        | EvalError::LevelTooHigh { .. }
                        | EvalError::BadInterval(..)
                )
        );
        if input {
            CliError::Input(e.to_string())
        } else {
            CliError::Failure(e.to_string())
        }
    }
}

fn load(input: &Input) -> Result<Mask, CliError> {
    let text = fs::read_to_string(&input.mask)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", input.mask.display())))?;
    let mut mask = parse_mask(&text).map_err(Error::from)?;
    if input.exact {
        mask = mask.to_exact().map_err(Error::from)?;
    }
    if let Some(w) = mask.sum_warning() {
        eprintln!("warning: {w}");
    }
    Ok(mask)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv(grid: &DyadicGrid, range: std::ops::Range<i64>) -> String {
    let mut s = String::from("x,re,im\n");
    for i in 0..grid.len() {
        let m = grid.start + i as i64;
        if range.contains(&m) {
            let z = grid.values[i];
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", grid.x(i), z.re, z.im);
        }
    }
    s
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { input, out } => {
            let mask = load(&input)?;
            let scale = mask.scale_matrices();
            let spectral = eigen_structure(&scale).map_err(Error::from)?;
            let ind = independence_test(&scale, &mask.polynomials()).map_err(Error::from)?;
            emit(out.as_deref(), &Report::spectral(&mask, &spectral, &scale, &ind).to_json())
        }
        Command::Basis { input, sampling, out } => {
            let mask = load(&input)?;
            let (a, b) = sampling.interval();
            let range = DyadicGrid::span(a, b, sampling.level).map_err(Error::from)?;
            let analysis = analyze(&mask, sampling.level, (a, b))?;
            let checks = analysis.checks(sampling.tolerance);
            fs::create_dir_all(&out)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out.display())))?;
            for (i, h) in analysis.basis.iter().enumerate() {
                write(&out.join(format!("h{i}.csv")), &csv(&h.samples, range.clone()))?;
            }
            let phi = analysis.evaluation.finest();
            write(&out.join("phi.csv"), &csv(phi, phi.indices()))?;
            let report = Report::full(&analysis, &checks, true).to_json();
            write(&out.join("report.json"), &report)?;
            print!("{report}");
            failures(&checks)
        }
        Command::Verify { input, sampling, out } => {
            let mask = load(&input)?;
            let analysis = analyze(&mask, sampling.level, sampling.interval())?;
            let checks = analysis.checks(sampling.tolerance);
            emit(out.as_deref(), &Report::full(&analysis, &checks, false).to_json())?;
            failures(&checks)
        }
    }
}

fn failures(checks: &[refinable::suite::Check]) -> Result<(), CliError> {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {:e} (tolerance {:e})", c.name, c.value, c.tolerance))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariants(failed))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Invariants(list) = &e {
                for f in list {
                    eprintln!("FAILED {f}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
