use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qoe_trust::scenario::{
    emit_metrics, load_config, run, sweep, sweep_file, write_metrics, ConfigError, Format,
};

const CONFIG_ERROR: u8 = 2;
const IO_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "qoe-trust", version, about = "Seeded trust and reputation simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// json_lines or summary_json.
        #[arg(long, default_value = "json_lines")]
        format: Format,
    },
    /// Run seeds config.seed .. config.seed + N in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: u64,
        /// Writes seed-<s>.jsonl per seed; without it, summaries go to stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Parse and validate a config, then print it with defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(ConfigError),
    Io(String, io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

fn io_err(what: impl Into<String>) -> impl FnOnce(io::Error) -> Failure {
    let what = what.into();
    move |e| Failure::Io(what, e)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            seed,
            out,
            format,
        } => {
            let cfg = load_config(&config)?;
            let series = run(&cfg, seed)?;
            match out {
                Some(path) => emit_metrics(&series, &path, format)
                    .map_err(io_err(path.display().to_string()))?,
                None => write_metrics(&series, io::stdout().lock(), format)
                    .map_err(io_err("<stdout>"))?,
            }
        }
        Command::Sweep {
            config,
            seeds,
            out_dir,
        } => {
            let cfg = load_config(&config)?;
            let all = sweep(&cfg, seeds)?;
            match out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(io_err(dir.display().to_string()))?;
                    for series in &all {
                        let path = sweep_file(&dir, series.summary.seed);
                        emit_metrics(series, &path, Format::JsonLines)
                            .map_err(io_err(path.display().to_string()))?;
                    }
                }
                None => {
                    let mut out = io::stdout().lock();
                    for series in &all {
                        write_metrics(series, &mut out, Format::SummaryJson)
                            .map_err(io_err("<stdout>"))?;
                    }
                }
            }
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            writeln!(io::stdout().lock(), "{}", cfg.to_json_pretty())
                .map_err(io_err("<stdout>"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) if e.is_io() => {
            eprintln!("error: {e}");
            ExitCode::from(IO_ERROR)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(Failure::Io(what, e)) => {
            eprintln!("error: cannot write {what}: {e}");
            ExitCode::from(IO_ERROR)
        }
    }
}
