use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cqnpm::Method;
use cqnpm_bench::{run_experiment, BenchError, ExperimentConfig, Sweep};

/// Run reconstruction benchmarks on a simulated non-Cartesian MRI problem.
#[derive(Parser, Debug)]
#[command(name = "cqnpm-bench", version)]
struct Cli {
    /// Experiment configuration file (`key = value` lines).
    #[arg(long, required_unless_present = "list_methods")]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the available methods and exit.
    #[arg(long)]
    list_methods: bool,
    /// Repeat the experiment for each value of one key, e.g. `gamma=1.25,1.7,2,3`.
    #[arg(long, value_name = "KEY=V1,V2,...")]
    sweep: Option<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_methods {
        for m in Method::ALL {
            println!("{m}");
        }
        return ExitCode::SUCCESS;
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_SOLVER),
        Err(e @ BenchError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

/// Returns whether every solver succeeded.
fn run(cli: &Cli) -> Result<bool, BenchError> {
    let path = cli.config.as_ref().expect("clap enforces --config");
    let mut config = ExperimentConfig::load(path)?;
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let runs = match &cli.sweep {
        None => vec![(None, config)],
        Some(spec) => {
            let sweep: Sweep = spec.parse()?;
            let configs = sweep.expand(&config)?;
            sweep
                .values
                .iter()
                .zip(configs)
                .map(|(value, mut cfg)| {
                    let label = format!("{}={}", sweep.key, value);
                    cfg.out = config.out.as_ref().map(|o| o.join(format!("{}_{}", sweep.key, value)));
                    (Some(label), cfg)
                })
                .collect()
        }
    };

    let mut ok = true;
    for (label, cfg) in runs {
        let artifact = run_experiment(&cfg)?;
        for run in &artifact.runs {
            let prefix = label.as_deref().map(|l| format!("[{l}] ")).unwrap_or_default();
            match &run.outcome {
                Ok(out) => {
                    let last = out.records.last().expect("iteration 0 is always recorded");
                    println!(
                        "{prefix}{:<8} iters {:>4}  cost {:.6e}  psnr {:6.2} dB  time {:.2}s",
                        run.method.name(),
                        last.iter,
                        last.cost,
                        last.psnr,
                        last.time_s
                    );
                }
                Err(e) => {
                    ok = false;
                    eprintln!("{prefix}{}: {e}", run.method.name());
                }
            }
        }
        if let Some(dir) = &cfg.out {
            println!("wrote {}", dir.display());
        }
    }
    Ok(ok)
}
