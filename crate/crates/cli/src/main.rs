use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod commands;
mod config;
mod error;

use error::{io_error, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    Exponents,
    Classify,
    Solve,
    Ivp,
    Broken,
    Identity,
    Transform,
    Scan,
}

/// Radial quasilinear problems with diffusion: exponents, solver, IVP
/// experiments, identity checks, transforms and phase-diagram scans.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides [output].dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for scans.
    #[arg(long, env = "RQDIFF_THREADS")]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_error(&args.config, e))?;
    let cfg = config::parse_config(&text)?;
    log::debug!("seed {}", cfg.seed);
    let dir = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    if let Some(k) = args.threads {
        if k == 0 {
            return Err(CliError::Validation("threads ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    use commands::*;
    let result = match args.command {
        Subcommand::Exponents => exponents(&cfg, &dir),
        Subcommand::Classify => classify(&cfg, &dir),
        Subcommand::Solve => solve(&cfg, &dir),
        Subcommand::Ivp => ivp(&cfg, &dir),
        Subcommand::Broken => broken(&cfg, &dir),
        Subcommand::Identity => identity(&cfg, &dir),
        Subcommand::Transform => transform(&cfg, &dir),
        Subcommand::Scan => scan(&cfg, &dir),
    };
    result.map(|_| dir.clone()).inspect_err(|e| {
        // best effort: the payload also goes to stdout
        let _ = std::fs::write(dir.join("error.json"), e.to_json() + "\n");
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            println!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
