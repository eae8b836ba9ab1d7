use std::path::PathBuf;
use std::process::ExitCode;

use aniso_content::closed_form::GASKET_DIMENSION;
use aniso_content::contents::{ContentKind, Normalization};
use aniso_content::job::{run, Command, JobConfig};
use aniso_content::{Error, Method};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status for malformed invocations and configuration errors.
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(
    name = "aniso",
    version,
    about = "Anisotropic tube volumes and Minkowski contents"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Volume profile r, V, S, kappa, err_budget (CSV) plus metadata JSON.
    Profile(Flags),
    /// Content envelopes with inequality verdicts (JSON).
    Content(Flags),
    /// Inequality ledger, Kneser and kappa checks; the exit code is the verdict.
    Verify(Flags),
    /// Exact gasket limits, optimizer constants and (r, V, S) table.
    GasketExact(Flags),
}

#[derive(Args)]
struct Flags {
    /// gasket:N, point, points:K, segment, triangle, triangle-boundary, square, body, JSON or file
    #[arg(long, default_value = "gasket:12")]
    set: String,
    /// disk64, diskN, square, triangle, cube, octahedron, JSON or file
    #[arg(long, default_value = "disk64")]
    body: String,
    #[arg(long)]
    grid_h: Option<f64>,
    #[arg(long)]
    pad: Option<f64>,
    #[arg(long)]
    rmin: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long, default_value_t = 4)]
    per_octave: usize,
    /// Content exponents, comma separated; `D` is log2(3)
    #[arg(long, value_delimiter = ',', value_parser = parse_s)]
    s: Vec<f64>,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ContentKind>,
    /// Output directory (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (falls back to ANISO_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Norm::None)]
    normalize: Norm,
    #[arg(long, value_enum, default_value_t = MethodArg::Grid)]
    method: MethodArg,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Relative height of a step added to V before the Kneser check
    #[arg(long)]
    inject_step: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    None,
    Omega,
    OmegaPrinted,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Grid,
    ClosedForm,
}

fn parse_s(text: &str) -> Result<f64, String> {
    match text.trim() {
        "D" | "d" | "log2(3)" => Ok(GASKET_DIMENSION),
        t => t.parse().map_err(|_| format!("`{t}` is not a number or D")),
    }
}

fn parse_kind(text: &str) -> Result<ContentKind, String> {
    ContentKind::parse(text).map_err(|e| e.to_string())
}

impl Flags {
    fn into_config(self, command: Command) -> JobConfig {
        JobConfig {
            command,
            set: self.set,
            body: self.body,
            grid_h: self.grid_h,
            pad: self.pad,
            rmin: self.rmin,
            rmax: self.rmax,
            per_octave: self.per_octave,
            s: self.s,
            kind: self.kind,
            out: self.out,
            seed: self.seed,
            threads: self.threads,
            normalize: match self.normalize {
                Norm::None => Normalization::None,
                Norm::Omega => Normalization::Omega,
                Norm::OmegaPrinted => Normalization::OmegaPrinted,
            },
            method: match self.method {
                MethodArg::Grid => Method::Grid,
                MethodArg::ClosedForm => Method::ClosedForm,
            },
            trials: self.trials,
            inject_step: self.inject_step,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let config = match cli.command {
        Sub::Profile(f) => f.into_config(Command::Profile),
        Sub::Content(f) => f.into_config(Command::Content),
        Sub::Verify(f) => f.into_config(Command::Verify),
        Sub::GasketExact(f) => f.into_config(Command::GasketExact),
    };
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => ExitCode::from(EXIT_IO),
                _ => ExitCode::from(EXIT_USAGE),
            }
        }
    }
}
