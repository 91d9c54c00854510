use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use splitpro::cli::{self, ConfigMap};
use splitpro::network::Topology;

/// Tracking solvers over behavioral network models: single-window solves,
/// a scaling benchmark, and a closed-loop input-constrained comparison.
#[derive(Parser)]
#[command(name = "splitpro", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one tracking window and export the planned trajectory.
    Solve {
        /// Flat key=value problem description.
        #[arg(long)]
        config: PathBuf,
        /// Where the solution CSV goes.
        #[arg(long)]
        out: PathBuf,
        /// Also export a `k,residual,cost` trace next to the solution.
        #[arg(long)]
        record_iterates: bool,
    },
    /// Time the monolithic solver against the distributed one.
    Bench {
        #[arg(long, default_value = "chain")]
        topology: Topology,
        /// Comma-separated network sizes, e.g. 5,10,15,20.
        #[arg(long, value_delimiter = ',', required = true)]
        nu: Vec<usize>,
        /// Timed rounds per size (one extra warm-up round is discarded).
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop comparison of the direct and splitting controllers.
    Mpc {
        /// Flat key=value scenario description.
        #[arg(long)]
        config: PathBuf,
        /// Where the per-step comparison CSV goes.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: Args) -> splitpro::Result<ExitCode> {
    match args.command {
        Command::Solve {
            config,
            out,
            record_iterates,
        } => {
            let cfg = ConfigMap::from_file(&config)?;
            let art = cli::run_solve(&cfg, &out, record_iterates)?;
            println!(
                "cost={} iterations={} converged={}",
                art.cost, art.iterations, art.converged
            );
            println!("wrote {}", out.display());
            if let Some(trace) = &art.trace {
                println!("wrote {}", trace.display());
            }
            if !art.converged {
                eprintln!("error: stopped before reaching tolerance; rerun with --record-iterates to inspect the residuals");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            topology,
            nu,
            repeats,
            seed,
            out,
        } => {
            let rows = cli::run_bench(topology, &nu, repeats, seed, &out)?;
            for r in &rows {
                println!(
                    "units={} centralized_lqr_mean={:.4}s distributed_worst_mean={:.4}s",
                    r.units, r.centralized_mean, r.distributed_mean
                );
            }
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Mpc { config, out } => {
            let cfg = ConfigMap::from_file(&config)?;
            let art = cli::run_mpc(&cfg, &out)?;
            println!(
                "method_1_cost={} method_2_cost={}",
                art.oracle.total_cost, art.split.total_cost
            );
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
