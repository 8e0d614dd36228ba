//! Command-line surface for the CCD feasibility-restoration library.
//!
//! Exit codes: 0 on success, 1 on errors, 2 when the framework finds the
//! problem irreducibly infeasible.

use ccd::baseline::run_baseline;
use ccd::config::{parse_config, RunConfig};
use ccd::framework::{run_framework, FrameworkStatus};
use ccd::ranking::rank_problem_metrics;
use ccd::relaxation::{ReducedProblem, SelectionVector};
use ccd::report;
use ccd::solver::grid_oracle;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ccd",
    about = "Restore feasibility to control co-design problems by ranked metric-bound relaxation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the ranking random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the solver/oracle grid resolution.
    #[arg(long, global = true)]
    grid: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Rank metrics by violation counts over the candidate population.
    Rank { config: PathBuf },
    /// Run the ranked relaxation loop to a solution.
    Solve { config: PathBuf },
    /// Run the all-relaxed weight-sweep baseline.
    Baseline { config: PathBuf },
    /// Exhaustively evaluate one selection vector on the design grid.
    Oracle {
        config: PathBuf,
        /// Selection bitstring, one character per metric, 1 = hard bound.
        #[arg(long)]
        selection: String,
    },
    /// Re-run a reference experiment with the default configuration.
    Reproduce {
        #[arg(value_parser = ["sweep", "framework", "baseline"])]
        experiment: String,
    },
}

fn load_config(path: &PathBuf, cli: &Cli) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut config = parse_config(&text).map_err(|e| e.to_string())?;
    apply_overrides(&mut config, cli);
    Ok(config)
}

fn apply_overrides(config: &mut RunConfig, cli: &Cli) {
    if let Some(seed) = cli.seed {
        config.ranking.seed = seed;
    }
    if let Some(grid) = cli.grid {
        config.solver.grid_resolution = grid;
    }
}

fn emit(cli: &Cli, text: &str) -> Result<(), String> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::Rank { config } => {
            let config = load_config(config, cli)?;
            let (problem, _) = config.build_problem().map_err(|e| e.to_string())?;
            let ranked = rank_problem_metrics(&problem, &config.ranking_scheme())
                .map_err(|e| e.to_string())?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => report::ranking_csv(&ranked),
                Format::Json => report::ranking_json(&ranked),
            };
            emit(cli, &text)?;
            Ok(0)
        }
        Command::Solve { config } => {
            let config = load_config(config, cli)?;
            solve_with(cli, &config)
        }
        Command::Baseline { config } => {
            let config = load_config(config, cli)?;
            baseline_with(cli, &config)
        }
        Command::Oracle { config, selection } => {
            let config = load_config(config, cli)?;
            let (problem, weights) = config.build_problem().map_err(|e| e.to_string())?;
            let bits = SelectionVector::from_bitstring(selection).map_err(|e| e.to_string())?;
            let reduced = ReducedProblem::with_nonnegative_weights(&problem, bits, weights)
                .map_err(|e| e.to_string())?;
            let resolution = cli.grid.unwrap_or(config.solver.grid_resolution);
            let outcome = grid_oracle(&reduced, resolution).map_err(|e| e.to_string())?;
            let text = match cli.format.unwrap_or(Format::Json) {
                Format::Csv => report::oracle_csv(&outcome, selection),
                Format::Json => report::oracle_json(&outcome, selection),
            };
            emit(cli, &text)?;
            Ok(0)
        }
        Command::Reproduce { experiment } => {
            let mut config = RunConfig::default();
            apply_overrides(&mut config, cli);
            match experiment.as_str() {
                "sweep" => {
                    let (problem, _) = config.build_problem().map_err(|e| e.to_string())?;
                    let text = report::sweep_csv(&problem).map_err(|e| e.to_string())?;
                    emit(cli, &text)?;
                    Ok(0)
                }
                "framework" => solve_with(cli, &config),
                _ => baseline_with(cli, &config),
            }
        }
    }
}

fn solve_with(cli: &Cli, config: &RunConfig) -> Result<u8, String> {
    let (problem, _) = config.build_problem().map_err(|e| e.to_string())?;
    let result =
        run_framework(&problem, &config.framework_config()).map_err(|e| e.to_string())?;
    let text = match cli.format.unwrap_or(Format::Json) {
        Format::Csv => report::framework_csv(&result),
        Format::Json => report::framework_json(&result),
    };
    emit(cli, &text)?;
    Ok(match result.status {
        FrameworkStatus::Solved => 0,
        FrameworkStatus::IrreduciblyInfeasible => 2,
    })
}

fn baseline_with(cli: &Cli, config: &RunConfig) -> Result<u8, String> {
    let (problem, _) = config.build_problem().map_err(|e| e.to_string())?;
    let report = run_baseline(
        &problem,
        &config.baseline.weight_levels,
        &config.solver_config(),
    )
    .map_err(|e| e.to_string())?;
    let text = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report::baseline_csv(&report, problem.num_metrics()),
        Format::Json => report::baseline_json(&report),
    };
    emit(cli, &text)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
