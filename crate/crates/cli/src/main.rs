mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Simulate learning dynamics in periodic zero-sum games.
#[derive(Debug, Parser)]
#[command(name = "pgames", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one dynamics on a game spec and write trajectory.csv.
    Simulate(commands::SimulateArgs),
    /// Run a named experiment (or `all`) and write its report.
    Reproduce(commands::ReproduceArgs),
    /// Check zero-sum, periodicity and equilibrium residuals of a game spec.
    Check(commands::CheckArgs),
    /// Compute statistics of a saved trajectory.
    Analyze(commands::AnalyzeArgs),
    /// Draw columns of a trajectory CSV or series of a report as an SVG line chart.
    Plot(commands::PlotArgs),
    /// List the registered experiments.
    List,
}

/// Output directory: the flag, else `PERIODIC_GAMES_OUT`, else `./out`.
pub(crate) fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("PERIODIC_GAMES_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use periodic_games::Error as E;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Json(_)
                | E::Csv(_)
                | E::Io(_)
                | E::UnknownName { .. }
                | E::Argument(_)
                | E::Shape(_)
                | E::ScheduleMalformed(_) => 2,
                _ => 1,
            };
        }
        if cause.is::<serde_json::Error>() || cause.is::<std::io::Error>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Reproduce(a) => commands::reproduce(a),
        Command::Check(a) => commands::check(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Plot(a) => commands::plot(a),
        Command::List => commands::list(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
