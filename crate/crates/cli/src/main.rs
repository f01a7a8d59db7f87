//! `oscilab`: batch front end over the oscilab-core modules.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use error::CliError;
use output::RunManifest;

pub const THREADS_ENV: &str = "OSCILAB_THREADS";

#[derive(Parser)]
#[command(name = "oscilab", version, about = "Oscillating-potential spectral diagnostics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one JSON configuration.
    Run {
        /// Configuration file (same as --config).
        config_file: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dot-path override, e.g. `params.scan.s=0.75`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; falls back to OSCILAB_THREADS, then all cores.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the command table.
    List,
}

fn resolve_threads(flag: Option<usize>) -> Result<usize, CliError> {
    let n = match flag {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::validation(THREADS_ENV, "OSCILAB_THREADS is a positive integer", v))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if n == 0 {
        return Err(CliError::validation("threads", "threads >= 1", 0));
    }
    Ok(n)
}

fn run(
    config_file: Option<PathBuf>,
    set: &[String],
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let path = config_file.ok_or_else(|| CliError::validation("config", "a config path is given", "none"))?;
    let (cfg, echo) = config::load(&path, set)?;
    let threads = resolve_threads(threads)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let dir = out.or(cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Compute(e.to_string()))?;
    let artifacts = commands::execute(&cfg.command, &cfg.params, seed)?;
    let manifest = RunManifest {
        tool: "oscilab",
        version: env!("CARGO_PKG_VERSION"),
        command: cfg.command.clone(),
        config: echo,
        seed,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: Vec::new(),
        lap_disclosures: Vec::new(),
    };
    output::commit(&dir, &artifacts, manifest)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::List => {
            print!("{}", commands::list_table());
            ExitCode::SUCCESS
        }
        Cmd::Run { config_file, config, set, out, seed, threads } => {
            match run(config.or(config_file), &set, out, seed, threads) {
                Ok(m) => {
                    let files: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
                    println!("{}", serde_json::json!({"status": "ok", "command": m.command, "outputs": files}));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    println!("{}", e.to_json());
                    eprintln!("oscilab: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
