use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scramble_cli::config::{resolve, RawConfig, Scale};
use scramble_cli::{emit_plots_only, run, RunOutcome};

#[derive(Parser)]
#[command(
    name = "scramble",
    about = "Classical stability exponents and quantum OTOC growth for coupled spins and Bose-Hubbard rings",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Compute threads backing dense linear algebra.
        #[arg(long)]
        workers: Option<usize>,
        /// RNG seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Problem-size preset (overrides the config).
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
    },
    /// Parse and validate a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate plot scripts for an existing run directory.
    EmitPlots {
        #[arg(long)]
        out: PathBuf,
    },
    /// List the available experiments.
    ListExperiments,
}

extern "C" {
    fn openblas_set_num_threads(n: std::os::raw::c_int);
}

fn set_workers(n: usize) {
    unsafe {
        openblas_set_num_threads(n.max(1) as std::os::raw::c_int);
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for (name, blurb) in scramble_cli::config::Experiment::all() {
                println!("{name:16} {blurb}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match RawConfig::from_path(&config)
            .and_then(|raw| resolve(&raw, None, None, None))
        {
            Ok(resolved) => {
                println!(
                    "ok: experiment {} (scale {:?}, seed {}) -> {}",
                    resolved.experiment.name(),
                    resolved.scale,
                    resolved.seed,
                    resolved.out_dir
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("config error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::EmitPlots { out } => match emit_plots_only(&out) {
            Ok(tasks) => {
                for t in tasks {
                    println!("{}: {}", t.name, t.status);
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run {
            config,
            out,
            workers,
            seed,
            scale,
        } => {
            if let Some(n) = workers {
                set_workers(n);
            }
            let resolved = match RawConfig::from_path(&config).and_then(|raw| {
                resolve(
                    &raw,
                    out.map(|p| p.to_string_lossy().into_owned()),
                    seed,
                    scale.map(Into::into),
                )
            }) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            eprintln!(
                "running {} (scale {:?}, seed {}) -> {}",
                resolved.experiment.name(),
                resolved.scale,
                resolved.seed,
                resolved.out_dir
            );
            match run(&resolved) {
                Ok(RunOutcome::UpToDate(m)) => {
                    println!(
                        "up to date: {} files verified against config hash {}",
                        m.files.len(),
                        &m.config_hash[..12]
                    );
                    ExitCode::SUCCESS
                }
                Ok(RunOutcome::Complete(m)) => {
                    println!(
                        "done: {} tasks, {} files -> {}",
                        m.tasks.len(),
                        m.files.len(),
                        resolved.out_dir
                    );
                    ExitCode::SUCCESS
                }
                Ok(RunOutcome::Partial(m)) => {
                    let failed: Vec<&str> = m
                        .tasks
                        .iter()
                        .filter(|t| t.status == "failed")
                        .map(|t| t.name.as_str())
                        .collect();
                    eprintln!("partial failure: {}", failed.join(", "));
                    ExitCode::from(EXIT_PARTIAL)
                }
                Err(e) => {
                    eprintln!("run failed: {e}");
                    ExitCode::from(EXIT_PARTIAL)
                }
            }
        }
    }
}
