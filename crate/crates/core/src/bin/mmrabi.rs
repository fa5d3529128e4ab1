use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mmrabi::commands::{error_record, exit_code, run_command, Command, RunOptions};
use mmrabi::config::{parse_config, RunConfig};
use mmrabi::eigen::DEFAULT_SEED;
use mmrabi::Error;

/// Multimode Rabi model of a Cooper-pair box coupled to a quarter-wave resonator.
#[derive(Debug, Parser)]
#[command(name = "mmrabi", version)]
struct Cli {
    /// One of: converge, converge-naive, couplings, modes, estimate, cpb, check
    #[arg(value_parser = parse_command)]
    command: Command,

    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory (overrides `out_dir`)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Mode count (m_max for the sweeps)
    #[arg(long)]
    modes: Option<usize>,

    /// Junction capacitance in fF (overrides `cj_ff`)
    #[arg(long = "cj-ff")]
    cj_ff: Option<f64>,

    /// Seed of the iterative eigensolver start vector
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn load(cli: &Cli) -> mmrabi::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(cj) = cli.cj_ff {
        cfg.cj_ff = cj;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = load(&cli).and_then(|cfg| {
        let opts = RunOptions {
            modes: cli.modes,
            seed: cli.seed,
            ..RunOptions::default()
        };
        let outcome = run_command(cli.command, &cfg, &opts)?;
        outcome.write_to(std::path::Path::new(&cfg.out_dir))?;
        Ok(outcome.success)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", error_record(&e, Some(cli.command.name())));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
