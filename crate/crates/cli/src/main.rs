mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{learn, prob, eval};

/// Exit status for input problems: missing or malformed files, bad queries.
pub const EXIT_INPUT: u8 = 1;
/// Exit status for failures inside the search itself.
pub const EXIT_SEARCH: u8 = 2;

#[derive(Parser)]
#[command(name = "lpad", version, about = "Inference and learning for logic programs with annotated disjunctions")]
struct Cli {
    /// Configuration file with one section per command; flags override it.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Maximum concurrent clause evaluations.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a theory from a bias file and mega-examples.
    Learn(learn::LearnArgs),
    /// Print the probability of a ground query under a theory.
    Prob(prob::ProbArgs),
    /// Cross-validated evaluation: train per fold, report PR/ROC metrics.
    Eval(eval::EvalArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    let file = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(f) => f,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(EXIT_INPUT);
        }
    };

    let jobs = cli
        .jobs
        .or_else(|| file.get_usize("common", "jobs").ok().flatten())
        .unwrap_or(1);
    if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        log::warn!("thread pool already configured: {err}");
    }

    let result = match cli.command {
        Command::Learn(args) => learn::run(args, &file),
        Command::Prob(args) => prob::run(args, &file),
        Command::Eval(args) => eval::run(args, &file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Error wrapper carrying the exit status contract.
pub struct CliError {
    pub error: anyhow::Error,
    pub search_failure: bool,
}

impl CliError {
    pub fn input(error: anyhow::Error) -> Self {
        CliError { error, search_failure: false }
    }

    pub fn search(error: anyhow::Error) -> Self {
        CliError { error, search_failure: true }
    }

    pub fn exit_code(&self) -> u8 {
        if self.search_failure {
            EXIT_SEARCH
        } else {
            EXIT_INPUT
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::input(e.into())
    }
}
