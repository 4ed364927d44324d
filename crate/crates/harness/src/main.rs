use std::fs::{self, File};
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use tempcast_harness::config::ExperimentConfig;
use tempcast_harness::{compare, plots, runner, synth};

#[derive(Parser)]
#[command(
    name = "tempcast",
    version,
    about = "Per-city temperature forecasting benchmark: ARIMA/SARIMAX, LSTM, and a spiking network"
)]
struct Cli {
    /// Print progress while running.
    #[arg(long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of parallel (city, model) workers.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Render SVG plots for a completed run directory.
    Plots {
        #[arg(long)]
        run: PathBuf,
    },
    /// Rebuild the comparison table from a completed run directory.
    Compare {
        #[arg(long)]
        run: PathBuf,
    },
    /// Augmented Dickey-Fuller stationarity test on a CSV column.
    Adf {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        column: String,
        /// Lag order (default: Schwert rule).
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// Generate a synthetic temperature/CO2 dataset plus a ready config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        cities: usize,
        #[arg(long, default_value_t = 80)]
        years: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, seed, jobs } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("cannot read config {}", config.display()))?;
            let mut experiment = ExperimentConfig::from_json(&text)?;
            if let Some(seed) = seed {
                experiment.seed = seed;
            }
            if let Some(jobs) = jobs {
                experiment.jobs = jobs;
            }
            if cli.verbose {
                eprintln!("config hash {}", experiment.hash());
            }
            let manifest = runner::run(&experiment)?;
            for pair in &manifest.pairs {
                let line = match &pair.reason {
                    Some(reason) => format!(
                        "{} / {} [{}]: {} ({reason})",
                        pair.city, pair.country, pair.model, pair.status
                    ),
                    None => format!(
                        "{} / {} [{}]: {}",
                        pair.city, pair.country, pair.model, pair.status
                    ),
                };
                if cli.verbose || pair.status != "success" {
                    eprintln!("{line}");
                }
            }
            println!(
                "run complete: {} pairs, manifest at {}",
                manifest.pairs.len(),
                experiment.output_dir.join("manifest.json").display()
            );
            Ok(ExitCode::from(manifest.exit_code() as u8))
        }
        Command::Plots { run } => {
            let written = plots::emit_plots(&run)?;
            for path in &written {
                println!("{}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { run } => {
            let entries = compare::entries_from_run_dir(&run)?;
            compare::write_comparison(&run, &entries)?;
            print!("{}", compare::comparison_csv(&entries));
            Ok(ExitCode::SUCCESS)
        }
        Command::Adf {
            csv,
            column,
            max_lag,
        } => {
            let values = read_csv_column(&csv, &column)?;
            let result = tempcast_core::stattests::adf_test(&values, max_lag)?;
            println!("ADF statistic: {:.4}", result.statistic);
            println!("lags used: {}", result.lags_used);
            println!(
                "critical values: 1% {:.2}, 5% {:.2}, 10% {:.2}",
                result.crit_1pct, result.crit_5pct, result.crit_10pct
            );
            println!(
                "stationary at 5%: {}",
                if result.is_stationary_5pct { "yes" } else { "no" }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            out,
            cities,
            years,
            seed,
        } => {
            synth::write_demo_dataset(&out, cities, years, seed)?;
            println!("wrote synthetic dataset and config under {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Numeric column from any CSV with a header row; empty cells are skipped.
fn read_csv_column(path: &PathBuf, column: &str) -> Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .with_context(|| format!("column `{column}` not found in {}", path.display()))?;
    let mut values = Vec::new();
    for row in reader.records() {
        let record = row?;
        let cell = record.get(idx).unwrap_or("").trim();
        if cell.is_empty() {
            continue;
        }
        let v: f64 = cell
            .parse()
            .with_context(|| format!("non-numeric cell `{cell}` in column `{column}`"))?;
        values.push(v);
    }
    if values.is_empty() {
        bail!("column `{column}` has no numeric values");
    }
    Ok(values)
}
