use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use surfstokes::harness::{parse_config, run_scenario, SCENARIOS};

/// Runs a named verification scenario from a key = value config file.
#[derive(Parser)]
#[command(version)]
struct Cli {
    config: PathBuf,
    /// Overrides the file's `scenario`.
    #[arg(long)]
    scenario: Option<String>,
    /// Overrides the file's `out_dir` (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the file's `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SURFSTOKES_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("warning: SURFSTOKES_THREADS ignored: {e}");
        }
    }
    let mut cfg = match parse_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    let Some(name) = cli.scenario.or(cfg.scenario) else {
        eprintln!("no scenario given; choose one of {}", SCENARIOS.join(", "));
        return ExitCode::from(2);
    };
    let out = cli.out.or(cfg.out_dir).unwrap_or_else(|| PathBuf::from("out"));
    match run_scenario(&name, &cfg.sim, &out) {
        Ok(report) => {
            print!("{report}");
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("scenario {name} failed: {e}");
            ExitCode::FAILURE
        }
    }
}
