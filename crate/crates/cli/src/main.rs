use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use uniformize_cli::config::Format;
use uniformize_cli::{describe_config, run, verify, CliError, RunArgs};
use uniformize_core::verify::DEFAULT_SEED;

#[derive(Parser)]
#[command(name = "uniformize", version, about = "Mean-field and uniformized dynamics scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario of a config and write its tables plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall-clock times (outputs are then no longer reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Print sector sizes, memory and tail estimates for a config.
    Describe {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the algebra, appendix, commutation and classical-limit suites.
    Verify {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn with_threads<T>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Validation(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("uniformize: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out_dir, format, threads, seed, timing } => {
            let args = RunArgs { config, out_dir, format, seed, timing };
            match with_threads(threads, || run(&args)).and_then(|r| r) {
                Ok(outcome) => {
                    for f in &outcome.files {
                        println!("{}", f.display());
                    }
                    if outcome.passed {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("uniformize: run {} finished with failed checks", outcome.run_id);
                        ExitCode::from(1)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Describe { config } => match describe_config(&config) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Verify { seed, threads } => match with_threads(threads, || verify(seed)).and_then(|r| r) {
            Ok((text, passed)) => {
                print!("{text}");
                if passed {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(&e),
        },
    }
}
