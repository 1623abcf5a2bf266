use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spin1_dsap::config::Mode;
use spin1_dsap::runner::{load_config, run, EXAMPLES};

/// Dark state adiabatic passage experiments on a three-spin chain.
#[derive(Parser, Debug)]
#[command(name = "dsap", version)]
struct Cli {
    /// spectrum | evolve | qutrit | dipole | adiabaticity | schedule
    mode: Option<String>,

    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output path, overriding `output_path` from the config.
    #[arg(long)]
    out: Option<PathBuf>,

    /// List the bundled example configurations and exit.
    #[arg(long)]
    list_examples: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if cli.list_examples {
        for (name, text) in EXAMPLES {
            let summary = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches('#')
                .trim();
            println!("{name:<24} {summary}");
        }
        return ExitCode::SUCCESS;
    }

    let config_failure = |msg: String| {
        eprintln!("dsap: {msg}");
        ExitCode::from(1)
    };
    let mode = match cli.mode.as_deref().map(str::parse::<Mode>).transpose() {
        Ok(m) => m,
        Err(e) => return config_failure(e.to_string()),
    };
    let Some(path) = cli.config else {
        return config_failure("--config <path> is required".into());
    };
    let mut cfg = match load_config(&path, mode) {
        Ok(cfg) => cfg,
        Err(e) => return config_failure(e.to_string()),
    };
    if let Some(out) = cli.out {
        cfg.output_path = out;
    }

    match run(&cfg) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) if e.is_config() => config_failure(e.to_string()),
        Err(e) => {
            eprintln!("dsap: {e}");
            ExitCode::from(2)
        }
    }
}
