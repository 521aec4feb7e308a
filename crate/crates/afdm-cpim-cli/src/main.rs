//! Command-line front end: BER sweeps, codebook design, GAS solves,
//! detection demos and distance-grid exports, driven by flat `key = value`
//! config files with `--override` stacking.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use afdm_cpim::Error;

#[derive(Parser)]
#[command(
    name = "afdm-cpim",
    version,
    about = "AFDM chirp-permutation index modulation simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory (default: $AFDM_CPIM_OUTPUT_DIR, then ./out)
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Override a config key (key=value, repeatable, applied after the file)
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Cap on worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo BER sweep over an Eb/N0 grid
    BerSweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Max-min codebook design via the exhaustive oracle and/or GAS
    CodebookDesign {
        #[arg(long)]
        config: PathBuf,
    },
    /// Minimize a binary objective with GAS
    GasSolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// One seeded end-to-end frame through every detector
    DetectDemo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Export the pairwise permutation distance grid
    DistanceGrid {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Exit codes: 0 success, 1 i/o or internal, 2 config, 3 budget refusal,
/// 4 numerical failure.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::BitLength { .. } | Error::InvalidCodebook(_) => 2,
        Error::BudgetExceeded { .. } => 3,
        Error::Numerical { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    let output_dir = cli
        .output_dir
        .or_else(|| std::env::var_os("AFDM_CPIM_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));

    let result = match &cli.command {
        Command::BerSweep { config } => commands::ber_sweep(config, &output_dir, &cli.overrides),
        Command::CodebookDesign { config } => {
            commands::codebook_design(config, &output_dir, &cli.overrides)
        }
        Command::GasSolve { config } => commands::gas_solve(config, &output_dir, &cli.overrides),
        Command::DetectDemo { config } => {
            commands::detect_demo(config, &output_dir, &cli.overrides)
        }
        Command::DistanceGrid { config } => {
            commands::distance_grid(config, &output_dir, &cli.overrides)
        }
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
