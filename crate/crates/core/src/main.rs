use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biln::harness::{self, report, theorems, ExperimentConfig};

#[derive(Parser)]
#[command(name = "biln", version, about = "Learning with bounded instance- and label-dependent label noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method over seeded trials.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.json and summary.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Repeat an experiment for several neighborhood sizes.
    SweepK {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,20,40")]
        k: Vec<usize>,
        /// Directory for sweep.json and sweep.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Check the collection and flip-rate guarantees on random noise models.
    ValidateTheorems {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random noise models per suite.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        /// Corrupted draws per point for the mixing-identity check.
        #[arg(long, default_value_t = 100_000)]
        mc_draws: usize,
    },
}

fn write(dir: &Path, name: &str, contents: &str) -> biln::Result<()> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, contents))
        .map_err(|source| biln::Error::Io { path, source })
}

fn run(command: Command) -> biln::Result<bool> {
    match command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = harness::run_experiment(&cfg)?;
            write(&out, "report.json", &report.to_json()?)?;
            let reports = [report];
            write(&out, "summary.csv", &report::summary_csv(&reports))?;
            print!("{}", report::render_table(&reports));
            Ok(true)
        }
        Command::SweepK { config, k, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let sweep = harness::k_sweep(&cfg, &k)?;
            write(&out, "sweep.json", &serde_json::to_string_pretty(&sweep)?)?;
            let csv = sweep.to_csv();
            write(&out, "sweep.csv", &csv)?;
            print!("{csv}");
            Ok(true)
        }
        Command::ValidateTheorems { seed, draws, mc_draws } => {
            let suites = theorems::run_all(seed, draws, mc_draws)?;
            for s in &suites {
                let verdict = if s.passed() { "PASS" } else { "FAIL" };
                println!(
                    "[{verdict}] {}: {} checks, {} violations ({})",
                    s.name, s.checks, s.violations, s.detail
                );
            }
            Ok(suites.iter().all(|s| s.passed()))
        }
    }
}

/// 0 on success, 1 on a usage or configuration error, 2 on a failed check.
fn exit_code(outcome: &biln::Result<bool>) -> u8 {
    match outcome {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = run(cli.command);
    if let Err(e) = &outcome {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&outcome))
}
