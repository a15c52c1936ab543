//! `gjms`: run the constant, solver and inequality checks and write a report.
//!
//! Exit status is 0 when every check passes, 1 when any fails, 2 on usage errors.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use gjms::{CheckRecord, Error};

use crate::commands::{Runner, Settings, SUITE};
use crate::report::{render_csv, render_json, write_artifacts, ParamsEcho, Section};

#[derive(Parser)]
#[command(name = "gjms", version, about = "Numerical checks for GJMS operators on odd spheres")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq)]
enum Command {
    /// Q-curvature 2/(n-2m)·Γ(n/2+m)/Γ(n/2-m), P(1), c_α and the sharp constant, exactly.
    Constants,
    /// P as a polynomial in -Δ, from the product of shifted Laplacians.
    Expand,
    /// Kernel constant γ in f^{(n-2m)/2} = γ∫|x-y|^{2m-n} f^{(n+2m)/2} dy, and that identity at 20 radii.
    Gamma,
    /// Picard iteration for u = γ∫|x-y|^{2m-n}(ε f^{2m} u + f^{-c_α} u^{-α}) dy.
    SolveIe,
    /// Minimize (∫φ^{1-α})^{2/(α-1)}∫(φPφ - εP(1)φ²) over positive zonal φ.
    Minimize,
    /// Constancy of minimizers over an (ε, α) grid, plus the dilation family at ε = 0.
    SweepLiouville,
    /// Uniform two-sided bounds of the equation-normalized minimizers across ε.
    SweepCompactness,
    /// Sharp Sobolev inequality at ε = 0 on seeded random trial functions (n = 2m-1).
    CheckSobolev,
    /// exp(-2⨍log φ)⨍φPφ ≥ Γ(n/2+m)/Γ(n/2-m) on seeded random trial functions (n = 2m-1).
    CheckLogsobolev,
    /// ∫(x·∇Q)u^{1-α} = c_α∫Q u^{1-α} on the bubble and a solver output, with boundary and antisymmetry terms.
    CheckPohozaev,
    /// u(x) ≥ u(x^λ) and F(x^λ) ≥ F(x) on {x₁ > λ} for a solver output.
    CheckMovingPlane,
    /// Hölder, Jensen and reverse-Jensen steps linking the critical, β and α ∈ (0,1) inequalities.
    CheckChain,
    /// Every command above plus the gradient, round-trip, Parseval and Kelvin properties.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Expand => "expand",
            Command::Gamma => "gamma",
            Command::SolveIe => "solve-ie",
            Command::Minimize => "minimize",
            Command::SweepLiouville => "sweep-liouville",
            Command::SweepCompactness => "sweep-compactness",
            Command::CheckSobolev => "check-sobolev",
            Command::CheckLogsobolev => "check-logsobolev",
            Command::CheckPohozaev => "check-pohozaev",
            Command::CheckMovingPlane => "check-moving-plane",
            Command::CheckChain => "check-chain",
            Command::All => "all",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct Flags {
    #[arg(long, global = true, default_value_t = 3)]
    n: usize,
    #[arg(long, global = true, default_value_t = 2)]
    m: usize,
    /// Exponent α [default: 7; 0.5 for check-chain]
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true, default_value_t = 0.1)]
    eps: f64,
    /// Intermediate exponent β of check-chain
    #[arg(long, global = true, default_value_t = 3.0)]
    beta: f64,
    #[arg(long, global = true, default_value_t = 24)]
    degree: usize,
    #[arg(long, global = true, default_value_t = 64)]
    resolution: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    trials: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override the primary tolerance of the command
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here (CSV artifacts go alongside) instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// More log output on stderr (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Flags {
    fn settings(&self) -> Settings {
        Settings {
            n: self.n,
            m: self.m,
            alpha: self.alpha,
            eps: self.eps,
            beta: self.beta,
            degree: self.degree,
            resolution: self.resolution,
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
        }
    }

    fn echo(&self) -> ParamsEcho {
        ParamsEcho {
            n: self.n,
            m: self.m,
            alpha: self.alpha,
            eps: self.eps,
            beta: self.beta,
            degree: self.degree,
            resolution: self.resolution,
            trials: self.trials,
            seed: self.seed,
            tol: self.tol,
        }
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::InvalidParams(_) | Error::AlphaIsOne | Error::DimensionMismatch { .. })
}

fn runner(name: &str) -> Runner {
    SUITE.iter().find(|(n, _)| *n == name).map(|(_, r)| *r).expect("known command")
}

/// Runs one command; numerical failures become a failed `error` check.
fn run_one(name: &str, s: &Settings) -> Result<Section, Error> {
    log::info!("running {name}");
    match runner(name)(s) {
        Ok(section) => Ok(section),
        Err(e) if is_usage(&e) => Err(e),
        Err(e) => {
            log::error!("{name}: {e}");
            let mut section = Section::default();
            section.check(CheckRecord::flag("error", false));
            section.put("error", e.to_string());
            Ok(section)
        }
    }
}

fn run(command: Command, s: &Settings) -> Result<Section, Error> {
    if command != Command::All {
        return run_one(command.name(), s);
    }
    let mut all = Section::default();
    for (name, _) in SUITE {
        let section = match run_one(name, s) {
            Ok(section) => section,
            // a parameter set can be valid for some commands and not others
            Err(e) => {
                log::warn!("{name} skipped: {e}");
                let mut skipped = Section::default();
                skipped.put("skipped", e.to_string());
                skipped
            }
        };
        all.absorb(name, section);
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.flags.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();

    let settings = cli.flags.settings();
    let section = match run(cli.command, &settings) {
        Ok(section) => section,
        Err(e) => {
            eprintln!("error: {e}\n\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
    };

    let artifacts = match &cli.flags.out {
        Some(path) => match write_artifacts(path, &section.artifacts) {
            Ok(names) => names,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        },
        None => Vec::new(),
    };
    let body = match cli.flags.format {
        Format::Json => render_json(cli.command.name(), &cli.flags.echo(), &section, &artifacts),
        Format::Csv => render_csv(&section),
    };
    match &cli.flags.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, body) {
                eprintln!("error: writing {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{body}"),
    }
    for c in section.checks.iter().filter(|c| !c.pass) {
        log::warn!("check failed: {} computed {:e} reference {:e}", c.name, c.computed, c.reference);
    }
    if section.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
