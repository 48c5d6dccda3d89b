use clap::{Parser, ValueEnum};
use qft_cli::commands::{cmd_evolve, cmd_sweep, cmd_validate, Exit};
use qft_cli::config::ScenarioConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Validate,
    Evolve,
    Sweep,
}

/// Runs validation suites, evolutions and parameter sweeps from a scenario file.
#[derive(Debug, Parser)]
#[command(name = "qft", version)]
struct Args {
    command: Command,
    config: PathBuf,
    /// Evolve without the connection term.
    #[arg(long)]
    no_connection: bool,
    /// Also write SVG plots of norm and energy.
    #[arg(long)]
    plots: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::ConfigError as u8 } else { 0 });
        }
    };
    let cfg = match ScenarioConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(Exit::ConfigError as u8);
        }
    };
    let result = match args.command {
        Command::Validate => cmd_validate(&cfg),
        Command::Evolve => cmd_evolve(&cfg, args.no_connection, args.plots),
        Command::Sweep => cmd_sweep(&cfg, args.no_connection),
    };
    match result {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(out.exit as u8)
        }
        Err(e) => {
            eprintln!("config error: {e}");
            ExitCode::from(Exit::ConfigError as u8)
        }
    }
}
