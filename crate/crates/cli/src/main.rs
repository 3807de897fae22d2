mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, Mode, RunConfig};
use run::Exit;

/// Prescribed k-curvature graphs over S¹ / S²: audit, continuation solve and export.
#[derive(Debug, Parser)]
#[command(
    name = "kcurv",
    version,
    after_help = "Exit codes:\n  0  success\n  2  configuration or I/O error\n  3  structural audit failed\n  4  barrier scan failed\n  5  continuation failed"
)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides the configured mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Overrides the grid resolution: `N` on S¹, `NLATxNLON` on S².
    #[arg(long, value_name = "RES")]
    resolution: Option<String>,
    /// Overrides the curvature order.
    #[arg(long)]
    k: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress the progress report on stderr.
    #[arg(long)]
    quiet: bool,
}

fn parse_resolution(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(['x', ','])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError::Invalid { key: "--resolution".into(), msg: format!("`{s}`: {e}") })
}

fn load(args: &Args) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::read_file(&args.config)?;
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if let Some(res) = &args.resolution {
        cfg.grid.resolution = parse_resolution(res)?;
    }
    if let Some(k) = args.k {
        cfg.k = k;
        cfg.solver.k = k;
    }
    if let Some(out) = &args.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load(&args).and_then(|cfg| run::run(&cfg, &cfg.output.dir).map(|o| (cfg, o)));
    match result {
        Ok((cfg, outcome)) => {
            if !args.quiet {
                eprintln!("kcurv: {:?} -> {}", outcome.exit, cfg.output.dir.display());
                if let Some(msg) = &outcome.message {
                    eprintln!("kcurv: {msg}");
                }
            }
            ExitCode::from(outcome.exit as u8)
        }
        Err(e) => {
            eprintln!("kcurv: {e}");
            ExitCode::from(Exit::Config as u8)
        }
    }
}
