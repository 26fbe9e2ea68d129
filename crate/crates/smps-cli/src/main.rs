use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use smps::models::AsepParams;
use smps_cli::verify::{report, run_checks, VerifyOptions};
use smps_cli::{commands, Grid, McSpec, Quantity, SweepSpec};

#[derive(Parser)]
#[command(
    name = "smps",
    version,
    about = "Stochastic matrix product states: ASEP and Ising reproductions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mutual information and entropy-cost bound over an (alpha, beta) grid
    PhaseSweep {
        /// Grid as start:stop:step, a comma list or one value
        #[arg(long, default_value = "0.05:0.95:0.05")]
        alpha: Grid,
        #[arg(long, default_value = "0.05:0.95:0.05")]
        beta: Grid,
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Defaults to N/2
        #[arg(long)]
        cut: Option<usize>,
        /// Subset of mi, entropy_cost_ub, spectrum, l1_truncation
        #[arg(long, default_value = "mi,entropy_cost_ub", value_delimiter = ',')]
        quantities: Vec<Quantity>,
        #[arg(long)]
        bond_cap: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sorted cut spectrum of the ASEP steady state
    Spectrum {
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long)]
        cut: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-site Ising entropy cost, closed form against the sMPS
    Ising {
        #[arg(long, default_value = "0:5:0.25")]
        beta: Grid,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of block mutual information
    Mc {
        /// One or more chain lengths
        #[arg(long, default_value = "4,8,12,16", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Simulated time discarded per batch; defaults to 20 N
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long)]
        cut: Option<usize>,
        /// Directory for binary run files
        #[arg(long)]
        save_runs: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified and measured error of bond truncation
    Truncate {
        #[arg(long, default_value_t = 0.3)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// Bond caps; defaults to 1..=N+1
        #[arg(long, value_delimiter = ',')]
        bond_cap: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and exit nonzero on any failure
    Verify {
        #[arg(long, default_value_t = 200)]
        corpus_size: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::PhaseSweep {
            alpha,
            beta,
            n,
            cut,
            quantities,
            bond_cap,
            out,
        } => {
            let spec = SweepSpec {
                alpha,
                beta,
                num_sites: n,
                cut,
                quantities,
                bond_cap,
            };
            commands::phase_sweep(&spec, open_output(&out)?)?;
        }
        Command::Spectrum {
            alpha,
            beta,
            n,
            cut,
            out,
        } => commands::spectrum(AsepParams::new(alpha, beta, n)?, cut, open_output(&out)?)?,
        Command::Ising { beta, out } => commands::ising(&beta, open_output(&out)?)?,
        Command::Mc {
            n,
            alpha,
            beta,
            samples,
            seed,
            burn_in,
            cut,
            save_runs,
            out,
        } => {
            let spec = McSpec {
                sizes: n,
                alpha,
                beta,
                samples,
                seed,
                burn_in,
                cut,
                save_runs,
            };
            commands::mc(&spec, open_output(&out)?)?;
        }
        Command::Truncate {
            alpha,
            beta,
            n,
            bond_cap,
            out,
        } => commands::truncate(
            AsepParams::new(alpha, beta, n)?,
            &bond_cap,
            open_output(&out)?,
        )?,
        Command::Verify { corpus_size, seed } => {
            let opts = VerifyOptions {
                corpus_size,
                seed,
                ..Default::default()
            };
            let checks = run_checks(&opts)?;
            return Ok(report(&checks, io::stdout().lock())?);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
