use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cogsched::harness::{compare_report, oracle_check, run_plan_file, OracleLimits, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "cogsched", version, about = "Cognitive radio scheduling experiments")]
struct Cli {
    /// Master seed; overrides the plan's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment plan and write its CSV results.
    Run { plan: PathBuf },
    /// Summarise one or more result CSVs.
    Compare {
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
    },
    /// Check the exact solvers against brute force on random instances up to NxFxT.
    OracleCheck {
        size_limits: String,
        #[arg(long, default_value_t = 2)]
        antennas: usize,
        #[arg(long, default_value_t = 9)]
        max_rate: u32,
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { plan } => {
            let opts = RunOptions { workers: cli.workers };
            let (result, csv) = run_plan_file(&plan, cli.seed, cli.out_dir.as_deref(), &opts)
                .with_context(|| format!("running {}", plan.display()))?;
            let periods: u64 = result.jobs.iter().map(|j| j.stats.periods).sum();
            let invalid = result.jobs.iter().filter(|j| j.stats.valid == Some(false)).count();
            println!("{} replications, {periods} periods -> {}", result.jobs.len(), csv.display());
            if invalid > 0 {
                println!("{invalid} replications failed the sample-size recheck");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { csvs } => {
            let report = compare_report(&csvs)?;
            print!("{report}");
            if let Some(dir) = cli.out_dir {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join("compare.csv");
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                report.write_csv(file)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck {
            size_limits,
            antennas,
            max_rate,
            instances,
        } => {
            let limits = OracleLimits {
                max_antennas: antennas,
                max_rate,
                instances,
                ..size_limits.parse()?
            };
            rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global()?;
            let report = oracle_check(&limits, cli.seed.unwrap_or(1))?;
            print!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
