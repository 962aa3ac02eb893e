mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{RunConfig, Settings, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(name = "beta-calc", version, about = "Quantum beta-calculus: integrals, derivatives and inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Beta-integral of f over [a, b].
    Integrate {
        /// Write the per-term partial sums as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Beta-derivative of f at t.
    Derivative {
        #[arg(long, allow_negative_numbers = true)]
        t: f64,
        /// Classical derivative of f at s0, used instead of a finite difference.
        #[arg(long, allow_negative_numbers = true)]
        s0_derivative: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
    },
    /// Run one inequality or identity check, or a randomized suite with --cases.
    Check {
        /// gruss, pre-gruss, cs, holder, korkine, rs-gruss, rs-variants, ftc, ibp, sharpness or prob.
        suite: String,
        /// Restrict rs-variants to one variant.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Probability model on [a, b]: masses, weights, Gruss window and product bounds.
    Prob,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match std::env::var_os(CONFIG_ENV) {
        Some(path) => match Settings::load_file(path.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => Settings::default(),
    };
    let cfg = RunConfig::resolve(cli.settings.or(file));
    let result = match cli.command {
        Command::Integrate { trace } => commands::integrate(&cfg, trace.as_deref()),
        Command::Derivative { t, s0_derivative, fd_step } => commands::derivative(&cfg, t, s0_derivative, fd_step),
        Command::Check { suite, variant } => commands::check(&cfg, &suite, variant.as_deref()),
        Command::Prob => commands::prob(&cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
