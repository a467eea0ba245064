use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radcell_cli::config::FileConfig;
use radcell_cli::output::Provenance;
use radcell_cli::{commands, CliError, Outcome};

#[derive(Debug, Parser)]
#[command(name = "radcell", version, about = "Radar-impaired LTE link simulator")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory the CSV files go to.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when omitted.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic D_max distribution against Monte Carlo.
    ValidateDist,
    /// Closed-loop throughput and BLER over an INR sweep.
    Sweep,
    /// PRI, pilot-contamination and contaminated-symbol statistics.
    DetectBench,
}

fn run(args: &Args) -> Result<Outcome, CliError> {
    let cfg = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = args.seed.unwrap_or(cfg.seed);
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let outcome = match args.command {
        Command::ValidateDist => commands::validate_dist(&cfg, seed)?,
        Command::Sweep => commands::sweep(&cfg, seed)?,
        Command::DetectBench => commands::detect_bench(&cfg, seed)?,
    };
    let prov = Provenance { config_hash: cfg.hash(), seed };
    for p in outcome.write(&args.out, &prov)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(o) => {
            for c in o.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {} [{}]: {}", c.name, c.scope, c.detail);
            }
            if o.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
