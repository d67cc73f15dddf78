//! Reproducible experiment harness: configs, runners, and the `ergolab`
//! command-line interface.
//!
//! An experiment is described by an [`ExperimentConfig`] — either parsed
//! from a TOML file (`ergolab run config.toml`) or assembled from CLI flags
//! (`ergolab backward --system bernoulli:2 --n-max 12 --points 4 --seed 9`).
//! [`run`] executes it and writes a CSV of results plus a JSON manifest that
//! echoes the resolved configuration and the per-point sub-seeds; re-running
//! the same configuration reproduces the CSV byte for byte.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` configuration problem.

mod config;
mod run;

pub use config::{
    chain_by_name, chain_names, observable_names, shift_system_by_id, ConfigError,
    ExperimentConfig, ExperimentKind, MarkovSpec, ObservableSpec, PolicySpec, TileRuleSpec,
    TilingSpec, TreeSpec,
};
pub use run::{
    run, RunError, RunManifest, SweepSummary, AVERAGE_HEADER, CSV_FORMAT, MARKOV_HEADER,
    TILING_HEADER,
};

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::systems::catalog_ids;
use crate::words::Symbol;

#[derive(Parser)]
#[command(
    name = "ergolab",
    version,
    about = "Weighted backward averages on trees, forward group averages, greedy tilings, and chain return-time analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List available system ids, chain names, and observable kinds.
    Catalog,
    /// Run an experiment described by a TOML config file.
    Run {
        /// Path to the config file.
        config: PathBuf,
        /// Override the CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Backward averages over complete preimage sweeps.
    Backward(ExperimentArgs),
    /// Forward averages over word balls of a rotation action.
    Forward(ExperimentArgs),
    /// Backward ball averages on a boundary shift.
    Boundary(ExperimentArgs),
    /// Greedy triangle tilings at fixed depth, or an epsilon-driven sweep.
    Tiling(TilingArgs),
    /// Monte Carlo return-time analysis of a chain.
    Markov(MarkovArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// System id (see `ergolab catalog`).
    #[arg(long)]
    system: Option<String>,
    /// Sweep depth / ball radius.
    #[arg(long)]
    n_max: Option<usize>,
    /// Number of sampled points.
    #[arg(long)]
    points: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output path (default: `<kind>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct TilingArgs {
    #[command(flatten)]
    base: ExperimentArgs,
    /// Constant triangle height assigned to every point.
    #[arg(long, default_value_t = 2)]
    height: usize,
    /// Run the parameter sweep targeting coverage `1 - epsilon` instead of
    /// tiling at a fixed depth.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct MarkovArgs {
    /// Chain name (see `ergolab catalog`).
    #[arg(long, default_value = "finfty_chain")]
    system: String,
    /// State to analyze; repeat for several states.
    #[arg(long = "state")]
    states: Vec<Symbol>,
    /// Excursions per state.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Steps before an excursion is censored.
    #[arg(long)]
    horizon: Option<usize>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output path (default: `markov-analyze.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
}

/// Entry point behind the `ergolab` binary. Takes the full argument vector
/// (program name first) and returns the process exit code: `0` on success,
/// `1` on runtime failure, `2` on configuration problems.
pub fn cli(argv: &[String]) -> i32 {
    let parsed = match Cli::try_parse_from(argv) {
        Ok(parsed) => parsed,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    match execute(parsed.command) {
        Ok(()) => 0,
        Err(RunError::Config(err)) => {
            eprintln!("error: {err}");
            2
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn execute(command: Command) -> Result<(), RunError> {
    let config = match command {
        Command::Catalog => {
            print_catalog();
            return Ok(());
        }
        Command::Run {
            config,
            out,
            workers,
        } => {
            let mut parsed = ExperimentConfig::from_path(&config)?;
            if out.is_some() {
                parsed.out = out;
            }
            if workers.is_some() {
                parsed.workers = workers;
            }
            parsed
        }
        Command::Backward(args) => {
            experiment_config(ExperimentKind::Backward, "bernoulli:2", 12, args)
        }
        Command::Forward(args) => {
            experiment_config(ExperimentKind::Forward, "skew:rotation:r=2", 12, args)
        }
        Command::Boundary(args) => {
            experiment_config(ExperimentKind::Boundary, "boundary:r=2:uniform", 10, args)
        }
        Command::Tiling(args) => {
            let mut config = experiment_config(ExperimentKind::Tiling, "bernoulli:2", 8, args.base);
            config.tiling.rule = TileRuleSpec::Constant {
                height: args.height,
            };
            config.tiling.epsilon = args.epsilon;
            config
        }
        Command::Markov(args) => {
            let mut config =
                ExperimentConfig::new(ExperimentKind::MarkovAnalyze, args.system, args.seed);
            if !args.states.is_empty() {
                config.markov.states = args.states;
            }
            config.markov.samples = args.samples;
            if let Some(horizon) = args.horizon {
                config.markov.horizon = horizon;
            }
            config.out = args.out;
            config.workers = args.workers;
            config
        }
    };
    let manifest = run(&config)?;
    eprintln!(
        "wrote {} rows to {} in {} ms (manifest: {})",
        manifest.rows,
        manifest.csv.display(),
        manifest.wall_ms,
        manifest.manifest_path().display()
    );
    if let Some(sweep) = &manifest.sweep {
        eprintln!(
            "sweep: band height {}, depth {}, success fraction {}",
            sweep.band_height, sweep.n, sweep.success_fraction
        );
    }
    Ok(())
}

fn experiment_config(
    kind: ExperimentKind,
    default_system: &str,
    default_n_max: usize,
    args: ExperimentArgs,
) -> ExperimentConfig {
    let system = args
        .system
        .unwrap_or_else(|| default_system.to_string());
    let mut config = ExperimentConfig::new(kind, system, args.seed);
    config.n_max = args.n_max.unwrap_or(default_n_max);
    if let Some(points) = args.points {
        config.points = points;
    }
    config.out = args.out;
    config.workers = args.workers;
    config
}

fn print_catalog() {
    println!("systems:");
    for id in catalog_ids() {
        println!("  {id}");
    }
    println!("chains:");
    for name in chain_names() {
        println!("  {name}");
    }
    println!("observables:");
    for name in observable_names() {
        println!("  {name}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(parts: &[&str]) -> Vec<String> {
        std::iter::once("ergolab")
            .chain(parts.iter().copied())
            .map(String::from)
            .collect()
    }

    #[test]
    fn help_and_version_exit_cleanly() {
        assert_eq!(cli(&args(&["--help"])), 0);
        assert_eq!(cli(&args(&["--version"])), 0);
        assert_eq!(cli(&args(&["backward", "--help"])), 0);
    }

    #[test]
    fn unknown_flags_are_config_errors() {
        assert_eq!(cli(&args(&["backward", "--frobnicate"])), 2);
        assert_eq!(cli(&args(&["no-such-command"])), 2);
        assert_eq!(cli(&args(&[])), 2);
    }

    #[test]
    fn missing_config_files_are_config_errors() {
        assert_eq!(cli(&args(&["run", "/definitely/missing.toml"])), 2);
    }

    #[test]
    fn catalog_subcommand_succeeds() {
        assert_eq!(cli(&args(&["catalog"])), 0);
    }

    #[test]
    fn backward_subcommand_writes_the_requested_csv() {
        let out = std::env::temp_dir().join(format!(
            "ergolab-cli-{}-backward.csv",
            std::process::id()
        ));
        let out_str = out.to_str().unwrap().to_string();
        let code = cli(&args(&[
            "backward",
            "--system",
            "bernoulli:2",
            "--n-max",
            "3",
            "--points",
            "2",
            "--seed",
            "9",
            "--out",
            &out_str,
        ]));
        assert_eq!(code, 0);
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), AVERAGE_HEADER);
        assert_eq!(text.lines().count(), 2 + 2 * 4);
        std::fs::remove_file(&out).ok();
        std::fs::remove_file(out.with_extension("manifest.json")).ok();
    }

    #[test]
    fn bad_system_ids_exit_with_config_code() {
        assert_eq!(
            cli(&args(&["backward", "--system", "bernoulli:one", "--seed", "3"])),
            2
        );
    }
}
