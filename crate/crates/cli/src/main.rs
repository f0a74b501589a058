use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fbmbt_cli::{run_experiment, CliError, ExperimentConfig, Verdict};

/// Run one fbmbt experiment from a JSON config.
///
/// Exit status: 0 when every verdict passes, 1 when one fails, 2 on a
/// configuration error.
#[derive(Debug, Parser)]
#[command(name = "fbmbt", version)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the CSV and JSON outputs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads; changes throughput only, never the results.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn run(args: &Args) -> anyhow::Result<bool> {
    let config = ExperimentConfig::load(&args.config)?;
    if args.verbose {
        eprintln!("running {} from {}", config.experiment, args.config.display());
    }
    let report = run_experiment(&config, &args.out, args.workers)
        .with_context(|| format!("experiment {} failed", config.experiment))?;
    if args.verbose {
        for c in &report.series_constants {
            eprintln!("{:<10} {:.12} (tail bound {:.2e})", c.name, c.value, c.tail_bound);
        }
        for r in &report.rates {
            eprintln!("rate {:<32} slope {:+.4} r^2 {:.3}", r.name, r.slope, r.r_squared);
        }
        eprintln!("{:.1}s, outputs in {}", report.runtime_seconds, args.out.display());
    }
    for t in &report.tests {
        let verdict = if t.verdict == Verdict::Pass { "PASS" } else { "FAIL" };
        match t.p_value {
            Some(p) => println!("{verdict} {} statistic {:.6e} p {:.4}", t.name, t.statistic, p),
            None => println!("{verdict} {} statistic {:.6e}", t.name, t.statistic),
        }
    }
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.chain().any(|c| c.downcast_ref::<CliError>().is_some_and(CliError::is_config));
            ExitCode::from(if config { 2 } else { 1 })
        }
    }
}
