use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use sparse_dist_lab::harness::{
    plan, read_results, run_grid, summarize, verification_suite, write_summary, ExperimentConfig, THREADS_ENV,
};

#[derive(Parser)]
#[command(name = "sparse-dist-lab", version, about = "Sparse distribution estimation under local privacy and communication constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a trial grid and append rows to the results CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; SPARSE_DIST_LAB_THREADS takes precedence.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Per-cell means and standard errors as JSON plus a plot CSV.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Planned sample size and risk bound for one parameter point.
    Plan {
        /// ldp, comm, or a scheme name.
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, conflicts_with = "ell")]
        eps: Option<f64>,
        #[arg(long)]
        ell: Option<u32>,
    },
    /// Run the exact bound checks and write them as JSON.
    VerifyBounds {
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn thread_count(flag: Option<usize>) -> anyhow::Result<usize> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        return Ok(n.max(1));
    }
    Ok(flag.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())).max(1))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, out, threads, seed } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            let threads = thread_count(threads)?;
            let start = Instant::now();
            let outcome = run_grid(&cfg, threads)?;
            eprintln!(
                "{} rows in {} ({} computed, {} resumed) on {threads} threads, {:.1}s",
                outcome.rows.len(),
                cfg.output.display(),
                outcome.computed,
                outcome.rows.len() - outcome.computed,
                start.elapsed().as_secs_f64()
            );
        }
        Command::Summarize { input, out } => {
            let rows = read_results(&input)?;
            anyhow::ensure!(!rows.is_empty(), "{} has no result rows", input.display());
            let summaries = summarize(&rows);
            let plot = write_summary(&summaries, &out)?;
            eprintln!("{} cells -> {}, {}", summaries.len(), out.display(), plot.display());
        }
        Command::Plan { scheme, k, s, alpha, eps, ell } => {
            println!("{}", plan(&scheme, k, s, alpha, eps, ell)?);
        }
        Command::VerifyBounds { out } => {
            let reports = verification_suite();
            let failed = reports.iter().filter(|r| !r.satisfied).count();
            let json = serde_json::to_string_pretty(&reports)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
            eprintln!("{} checks, {failed} violated", reports.len());
            if failed > 0 {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
