use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use manifold_lqg::cli::{emit_plot, run_experiment_file, Overrides};

const THREADS_ENV: &str = "MANIFOLD_LQG_THREADS";

#[derive(Parser)]
#[command(name = "manifold-lqg", version, about = "Online Newton on manifold experiments for constrained online LQG")]
struct Cli {
    /// Worker threads for Monte-Carlo runs (falls back to MANIFOLD_LQG_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Write artifacts here instead of the config's output_dir.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Replace the config's master_seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Render a summary CSV as an SVG regret plot.
    Plot { summary: PathBuf, out: PathBuf },
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {v:?}")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_count(cli.threads) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(2);
        }
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }

    match cli.command {
        Command::Run {
            config,
            output_dir,
            seed_override,
        } => {
            let overrides = Overrides {
                output_dir,
                master_seed: seed_override,
            };
            match run_experiment_file(&config, &overrides) {
                Ok(manifest) => {
                    for g in &manifest.groups {
                        println!(
                            "{:<28} final regret {:>12.6} ± {:.6} over {} runs",
                            g.label, g.final_regret_mean, g.final_regret_std, g.runs
                        );
                    }
                    println!("artifacts written to {}", manifest.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Plot { summary, out } => match emit_plot(&summary, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}
