use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use edgeflow_core::metrics::PlatformTable;
use edgeflow_core::{
    directional_checks, emit_summary, load_config, load_profiles, platform_report, run_compare,
    run_simulation, run_sweep, seed_list, Comparison, ReportOptions, ResponsivenessMode, RunConfig,
    Strategy,
};

const SEED_ENV: &str = "EDGEFLOW_SEED";

#[derive(Parser)]
#[command(
    name = "edgeflow",
    version,
    about = "Edge-first LM inference simulator and cost metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write summary.json, timeseries.csv and devices.csv.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<Strategy>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Every strategy under steady and bursty load, aggregated over seeds.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        seeds: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Every strategy at each window length, aggregated over seeds.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<u32>>,
        #[arg(long)]
        seeds: Option<u32>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cost per response, utility and PCR for every platform in a profile file.
    Metrics {
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 48)]
        avg_in: u64,
        #[arg(long, default_value_t = 249)]
        avg_out: u64,
        #[arg(long, value_parser = parse_r_mode, default_value = "raw")]
        r_mode: ResponsivenessMode,
        /// Overrides the rate given in the profile file.
        #[arg(long)]
        electricity_rate: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Seed of the run, or the first seed of a seed list.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

fn parse_r_mode(s: &str) -> Result<ResponsivenessMode, String> {
    match s {
        "raw" => Ok(ResponsivenessMode::Raw),
        "inverse_ttft" => Ok(ResponsivenessMode::InverseTtft),
        other => Err(format!(
            "unknown r mode `{other}` (expected raw | inverse_ttft)"
        )),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .with_context(|| format!("{SEED_ENV}={v} is not an unsigned integer")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => bail!("{SEED_ENV}: {e}"),
    }
}

/// Loads the config and applies seed precedence: flag, file, environment.
fn load(run: &RunArgs) -> Result<RunConfig> {
    let mut cfg = load_config(&run.config)?;
    if let Some(seed) = run.seed {
        cfg.sim.seed = seed;
    } else if !cfg.seed_from_file {
        if let Some(seed) = env_seed()? {
            cfg.sim.seed = seed;
        }
    }
    Ok(cfg)
}

fn seeds_for(cfg: &RunConfig, flag: Option<u32>) -> Result<Vec<u64>> {
    let n = flag.unwrap_or(cfg.seeds);
    if n == 0 {
        bail!("--seeds must be >= 1");
    }
    Ok(seed_list(cfg.sim.seed, n))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn write_comparison(cmp: &Comparison, out: &Path, stem: &str) -> Result<()> {
    let csv = write(out, &format!("{stem}.csv"), &cmp.to_csv())?;
    let json = write(
        out,
        &format!("{stem}.json"),
        &(serde_json::to_string_pretty(cmp)? + "\n"),
    )?;
    eprintln!("wrote {} and {}", csv.display(), json.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { run, strategy, out } => {
            let mut cfg = load(&run)?;
            if let Some(s) = strategy {
                cfg.sim.strategy = s;
            }
            let report = run_simulation(&cfg.sim)?;
            let files = emit_summary(&report, &out)
                .with_context(|| format!("cannot write run files to {}", out.display()))?;
            let t = &report.totals;
            println!(
                "seed {} {}: {} requests, {} edge, {} cloud, {} dropped, {} tokens to cloud, {:.4} cents",
                report.config.seed,
                report.config.strategy,
                t.requests,
                t.edge_processed,
                t.cloud_redirected,
                t.dropped,
                t.tokens_to_cloud,
                t.cloud_cost_cents
            );
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Compare { run, seeds, out } => {
            let cfg = load(&run)?;
            let seeds = seeds_for(&cfg, seeds)?;
            let cmp = run_compare(&cfg.sim, &seeds)?;
            print!("{cmp}");
            println!();
            for c in directional_checks(&cmp) {
                println!(
                    "{} {:<5} {:>5.1}% of seeds  {}",
                    c.name,
                    if c.holds_on_means { "holds" } else { "fails" },
                    c.per_seed_fraction * 100.0,
                    c.description
                );
            }
            write_comparison(&cmp, &out, "compare")?;
        }
        Command::Sweep {
            run,
            windows,
            seeds,
            out,
        } => {
            let cfg = load(&run)?;
            let windows = windows.unwrap_or_else(|| cfg.windows.clone());
            if windows.is_empty() {
                bail!("--windows needs at least one value");
            }
            let seeds = seeds_for(&cfg, seeds)?;
            let cmp = run_sweep(&cfg.sim, &windows, &seeds)?;
            print!("{cmp}");
            write_comparison(&cmp, &out, "sweep")?;
        }
        Command::Metrics {
            profiles,
            alpha,
            avg_in,
            avg_out,
            r_mode,
            electricity_rate,
            out,
        } => {
            let mut set = load_profiles(&profiles)?;
            if let Some(rate) = electricity_rate {
                set.pricing.rate_cents_per_kwh = rate;
            }
            let opts = ReportOptions {
                alpha,
                avg_in,
                avg_out,
                r_mode,
                ..ReportOptions::default()
            };
            let rows = platform_report(&set.devices, &set.cloud, &set.pricing, &opts)?;
            print!("{}", PlatformTable(&rows));
            let path = write(
                &out,
                "platform_report.json",
                &(serde_json::to_string_pretty(&rows)? + "\n"),
            )?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
