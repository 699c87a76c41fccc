use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::{Globals, Scheme};

#[derive(Debug, Parser)]
#[command(
    name = "emspace",
    version,
    about = "Electromagnetic information-space simulator"
)]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores if absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the cylindrical truncation order.
    #[arg(long, global = true)]
    nmax: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Normalized |E| on the probe grid, with solve timing.
    Fieldmap,
    /// Singular values, effective capacity and per-mode field maps.
    Modes,
    /// Effective-capacity sweep from the scenario's [sweep] table.
    Sweep,
    /// Sends an 8-bit PGM image over the link with BPSK.
    Transmit {
        /// Input PGM; a 128x128 test pattern if absent.
        #[arg(long)]
        image: Option<PathBuf>,
        /// `optimized` or `mode-K` (K counted from 1).
        #[arg(long, default_value = "optimized")]
        scheme: Scheme,
        /// Overrides the noise standard deviation.
        #[arg(long)]
        noise_std: Option<f64>,
        /// Overrides the transmit power budget.
        #[arg(long)]
        p0: Option<f64>,
    },
    /// Golden-file maintenance.
    Oracle {
        #[command(subcommand)]
        action: OracleAction,
    },
}

#[derive(Debug, Subcommand)]
enum OracleAction {
    /// Recomputes every golden file from the independent oracles.
    Regenerate {
        #[arg(long, default_value = "golden")]
        golden: PathBuf,
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
    },
}

fn run(cli: Cli) -> emspace::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(emspace::Error::Config(
                "--threads must be at least 1".into(),
            ));
        }
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let g = Globals {
        scenario: cli.scenario,
        out: cli.out,
        seed: cli.seed,
        nmax: cli.nmax,
    };
    match cli.command {
        Command::Fieldmap => commands::fieldmap(&g),
        Command::Modes => commands::modes(&g),
        Command::Sweep => commands::sweep(&g),
        Command::Transmit {
            image,
            scheme,
            noise_std,
            p0,
        } => commands::transmit(&g, image.as_deref(), scheme, noise_std, p0),
        Command::Oracle {
            action: OracleAction::Regenerate { golden, scenarios },
        } => commands::regenerate(&golden, &scenarios),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
