use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::LevelFilter;

use subharnack::cli::{execute, ExitStatus};

/// Runs one experiment described by a key=value config file.
#[derive(Debug, Parser)]
#[command(name = "subharnack", version)]
struct Args {
    /// experiment config (key=value pairs, `#` comments)
    config: PathBuf,
    /// output directory; overrides `output=` in the config
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// worker threads; falls back to SUBHARNACK_THREADS
    #[arg(long, value_name = "K")]
    threads: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("SUBHARNACK_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("SUBHARNACK_THREADS must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.verbose { LevelFilter::Info } else { LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    match thread_count(args.threads) {
        Ok(Some(0)) => {
            eprintln!("error: thread count must be positive");
            return ExitCode::from(ExitStatus::ConfigError as u8);
        }
        Ok(Some(k)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(ExitStatus::NumericalFailure as u8);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(ExitStatus::ConfigError as u8);
        }
    }

    let (status, message) = execute(&args.config, args.out.as_deref());
    if let Some(m) = message {
        eprintln!("error: {m}");
    }
    ExitCode::from(status as u8)
}
