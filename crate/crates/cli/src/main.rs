use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavityflow_cli::config::{load_config, RunConfig};
use cavityflow_cli::run::{bench, check, run, Status};
use clap::{Parser, Subcommand};

fn defaults_help() -> String {
    format!(
        "Configuration is a TOML document; every key is optional. Defaults:\n\n{}",
        RunConfig::default().effective_config()
    )
}

/// Steady natural convection and heat transfer in a sealed MEMS gyroscope
/// cavity, swept over gap heights and ambient temperatures.
#[derive(Parser)]
#[command(name = "cavityflow", version, after_long_help = defaults_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a configuration file.
    #[command(after_long_help = defaults_help())]
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides `threads` (0 = all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Write per-case field files.
        #[arg(long)]
        emit_fields: bool,
    },
    /// Validate a configuration and print the effective document.
    Check { config: PathBuf },
    /// Differentially heated cavity benchmark (Pr = 0.71, Ra = 1e3 and 1e4).
    Bench {
        /// Cells per side.
        #[arg(long, default_value_t = 80)]
        grid: usize,
    },
}

fn init_logging(default: &str) {
    let env = env_logger::Env::default().default_filter_or(default);
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn load(path: &Path) -> Result<RunConfig, ExitCode> {
    load_config(path).map_err(|e| {
        init_logging("error");
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(Status::ConfigError as u8)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are configuration errors, not failed cases.
            return ExitCode::from(if e.use_stderr() { Status::ConfigError as u8 } else { 0 });
        }
    };
    let status = match cli.command {
        Command::Run { config, out, threads, emit_fields } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(n) = threads {
                cfg.plan.threads = n;
            }
            cfg.emit_fields |= emit_fields;
            init_logging(cfg.log_level.as_filter());
            run(&cfg)
        }
        Command::Check { config } => match load(&config) {
            Ok(cfg) => check(&cfg),
            Err(code) => return code,
        },
        Command::Bench { grid } => {
            init_logging("info");
            bench(grid)
        }
    };
    ExitCode::from(status as u8)
}
