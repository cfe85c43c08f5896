//! `channelfj` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigError;

#[derive(Parser, Debug)]
#[command(name = "channelfj", version, about = "Effective diffusion in narrow curved channels")]
struct Cli {
    /// Channel description (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for `figures`); stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads for sweeps and particle runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative tolerance for quadrature.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Effective diffusion coefficient profile.
    Deff {
        /// Comma-separated: quadrature, closed, series[:N], second_order, auto.
        #[arg(long, value_delimiter = ',', default_value = "auto,quadrature")]
        methods: Vec<String>,
    },
    /// Section moments, sizes and orientation along the channel.
    Moments {
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
    /// Time-dependent or steady reduced equation.
    Solve(commands::SolveArgs),
    /// Brownian motion in the full 3D channel.
    Mc(commands::McArgs),
    /// Data behind the figures (3, 4, 5, 6, 7); all when none is given.
    Figures {
        #[arg(long, value_delimiter = ',')]
        which: Vec<u8>,
    },
    /// Parses the config and checks narrowness along the channel.
    Validate {
        #[arg(long, default_value_t = 1024)]
        points: usize,
    },
}

/// Exit status for an error: 2 config, 3 numerical, 4 solver.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    if let Some(e) = err.downcast_ref::<channelfj::Error>() {
        use channelfj::Error as E;
        return match e.root() {
            E::SolverFailure(_) => 4,
            E::InvalidParameter(_) | E::NonCenteredSection { .. } | E::UnsupportedSection { .. } | E::StepTooLarge { .. } => 2,
            _ => 3,
        };
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure thread pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
