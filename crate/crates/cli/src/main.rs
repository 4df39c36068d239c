//! `bosegas`: config-driven driver for the dilute Bose gas energy engine.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 config error,
//! 3 domain/regime error, 4 numeric non-convergence.

mod commands;
mod config;
mod output;

use bosegas_core::Error;
use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bosegas", version, about = "Dilute Bose gas trial-state energy engine")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's outputs.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format (overrides the config's outputs.formats).
    #[arg(long, global = true, value_parser = ["csv", "doc"])]
    format: Option<String>,

    /// Worker threads for the parallel kernels (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized verification suites.
    #[arg(long, global = true, default_value_t = 20080815)]
    seed: u64,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the zero-energy scattering problem and write the table.
    Scatter,
    /// Evaluate trial-state energies over the configured densities.
    Energy,
    /// Run the density sweep and verify the second-order coefficient.
    LhyCheck,
    /// Brute-force Fock-space verification of every closed-form moment.
    Oracle {
        /// Corrupt the named analytic formula (test mode: the run must fail).
        #[arg(long)]
        inject_fault: Option<String>,
    },
    /// Tabulate the universal integral: h, Φ(h), S_λ.
    PhiTable {
        /// Grid as start:stop:step.
        #[arg(long, default_value = "0:0.5:0.05")]
        h_grid: String,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Verification(_) => 1,
        Error::Config(_) => 2,
        Error::Domain(_) | Error::Capacity(_) => 3,
        Error::Numeric { .. } => 4,
    }
}

fn run(cli: &Cli) -> bosegas_core::Result<()> {
    if let Some(n) = cli.threads {
        // best effort; later subcommand calls reuse the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let need_config = !matches!(cli.cmd, Cmd::PhiTable { .. });
    let mut cfg = match &cli.config {
        Some(path) => Some(RunConfig::load(path)?),
        None if need_config => {
            return Err(Error::Config("--config is required for this command".into()))
        }
        None => None,
    };
    if let (Some(cfg), Some(fmt)) = (cfg.as_mut(), &cli.format) {
        cfg.outputs.formats = Some(vec![fmt.clone()]);
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| {
            cfg.as_ref()
                .and_then(|c| c.outputs.directory.clone().map(PathBuf::from))
        })
        .unwrap_or_else(|| PathBuf::from("out"));

    match &cli.cmd {
        Cmd::Scatter => commands::cmd_scatter(cfg.as_ref().unwrap(), &out_dir),
        Cmd::Energy => commands::cmd_energy(cfg.as_ref().unwrap(), &out_dir),
        Cmd::LhyCheck => commands::cmd_lhy_check(cfg.as_ref().unwrap(), &out_dir),
        Cmd::Oracle { inject_fault } => commands::cmd_oracle(
            cfg.as_ref().unwrap(),
            &out_dir,
            cli.seed,
            inject_fault.as_deref(),
        ),
        Cmd::PhiTable { h_grid } => {
            let sha = cfg
                .as_ref()
                .map(|c| c.config_sha256.clone())
                .unwrap_or_else(|| "none".into());
            commands::cmd_phi_table(h_grid, &out_dir, &sha)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
