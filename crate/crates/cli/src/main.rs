use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use quva_cli::commands::{cmd_correlation, cmd_run, cmd_verify, Overrides};
use quva_cli::verify::VerifyOptions;
use quva_core::pde::ShiftConvention;

#[derive(Parser)]
#[command(name = "quva", version, about = "Variational differential-equation solver on a simulated quantum register")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shift {
    Forward,
    Backward,
}

#[derive(clap::Args)]
struct Common {
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Skips SVG output.
    #[arg(long)]
    no_plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the random-plus-guided search for one configuration.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Switches to shot-sampled measurements with N shots per protocol.
        #[arg(long, value_name = "N")]
        shots: Option<u64>,
    },
    /// Runs the self-check suite.
    Verify {
        #[arg(long, value_enum, default_value = "forward", hide = true)]
        shift_convention: Shift,
    },
    /// Samples expectation against residual for each ansatz depth.
    Correlation {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("QUVA_THREADS") else { return Ok(()) };
    let threads: usize = value.parse().map_err(|_| format!("QUVA_THREADS must be a positive integer, got '{value}'"))?;
    if threads == 0 {
        return Err("QUVA_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("config error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Run { config, common, shots } => {
            let overrides = Overrides { seed: common.seed, output_dir: common.output_dir, shots, no_plots: common.no_plots };
            match cmd_run(&config, &overrides) {
                Ok(out) => {
                    let s = &out.summary;
                    println!("wrote {}", out.output_dir.display());
                    println!("records {}, flagged {}", s.n_records, s.candidate_count);
                    match s.best_fidelity {
                        Some(f) => println!("best flagged fidelity {f:.4} (record {})", s.best_fidelity_index.unwrap_or_default()),
                        None => println!("best flagged fidelity: none"),
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Verify { shift_convention } => {
            let shift_convention = match shift_convention {
                Shift::Forward => ShiftConvention::Forward,
                Shift::Backward => ShiftConvention::Backward,
            };
            let (outcomes, ok) = cmd_verify(&VerifyOptions { shift_convention });
            for o in &outcomes {
                println!("{}", o.line());
            }
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Correlation { config, common } => {
            let overrides = Overrides { seed: common.seed, output_dir: common.output_dir, shots: None, no_plots: common.no_plots };
            match cmd_correlation(&config, &overrides) {
                Ok(summaries) => {
                    for s in summaries {
                        println!(
                            "depth {}: {} samples, Spearman {:.3}, Cauchy-Schwarz violations {}",
                            s.depth, s.n_samples, s.spearman, s.cauchy_schwarz_violations
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
