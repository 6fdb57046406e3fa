use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;

use ris_cli::config::{check_dimension, max_dim_from_env, parse_config, Experiment};
use ris_cli::run::{run_with_jobs, write_outputs};

/// Runs one repeated-interaction experiment described by a JSON config and
/// writes a CSV plus a `.meta.json` sidecar.
///
/// Exit status: 0 on success, 2 when an oracle experiment misses its
/// tolerance, 1 on any error.
#[derive(Parser, Debug)]
#[command(name = "ris", version)]
struct Cli {
    /// effective, converge-lambda, converge-tau, asymptotic, kato,
    /// dyson-check or spin-oracle; must match the config.
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; defaults to the config's "output", then
    /// `<experiment>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the config's "jobs", then all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let Some(wanted) = Experiment::from_name(&cli.experiment) else {
        bail!("unknown experiment {:?}", cli.experiment);
    };
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    let cfg = parse_config(&text)?;
    if cfg.experiment != wanted {
        bail!(
            "command line asks for {wanted} but the config describes {}",
            cfg.experiment
        );
    }
    let cap = max_dim_from_env().map_err(anyhow::Error::msg)?;
    check_dimension(&cfg, cap)?;
    let jobs = cli.jobs.or(cfg.jobs);
    if jobs == Some(0) {
        bail!("--jobs must be positive");
    }
    let out = cli
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));

    let (outcome, wall) = run_with_jobs(&cfg, jobs)?;
    write_outputs(&cfg, &outcome, &out, wall, cap)?;
    if !outcome.within_tolerance {
        eprintln!(
            "{}: tolerance check failed, see {}",
            cfg.experiment,
            out.display()
        );
    }
    Ok(outcome.within_tolerance)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
