mod commands;
mod config;
mod verify;

use clap::Parser;
use commands::{RunError, COMMANDS};
use config::{parse_config, OUTPUT_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical laboratory for an intermittent area-preserving torus map.
#[derive(Debug, Parser)]
#[command(name = "intermap", version)]
struct Cli {
    /// One of: orbit, manifold, slopes, expansion, passage, ulam, correlate, clt, verify.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(COMMANDS))]
    command: String,
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set ulam.grid=64`. May be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_pair)]
    set: Vec<(String, String)>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script for `correlate`.
    #[arg(long)]
    gnuplot: bool,
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.set.clone();
    if let Some(s) = cli.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(w) = cli.workers {
        overrides.push(("workers".into(), w.to_string()));
    }
    if let Some(o) = &cli.out {
        overrides.push(("output".into(), o.display().to_string()));
    }
    let cfg = match parse_config(
        cli.config.as_deref(),
        &overrides,
        std::env::var(OUTPUT_ENV).ok(),
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("intermap: {e}");
            return ExitCode::from(2);
        }
    };
    let (report, res) = commands::run(&cli.command, &cfg, cli.gnuplot);
    if let Some(rep) = &report {
        let _ = rep.write(&mut std::io::stdout().lock());
        let _ = rep.write_runtime(&mut std::io::stderr().lock());
    }
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("intermap {}: {e}", cli.command);
            match e {
                RunError::Io(_) => ExitCode::from(2),
                RunError::Numerical(_) | RunError::Invariants(_) => ExitCode::from(1),
            }
        }
    }
}
