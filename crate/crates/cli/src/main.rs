//! `logfuture`: build timelines, train on scenarios, and reproduce the
//! canonical experiments from the command line.
//!
//! Every CSV written carries its full run configuration on a `# config:`
//! line; `logfuture --replay FILE` reruns it.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;
mod error;

use commands::Invocation;
use config::{Command, RunConfig};
use error::{exit_code, CliError};

#[derive(Debug, Parser)]
#[command(
    name = "logfuture",
    version,
    about = "Scale-invariant future timelines",
    arg_required_else_help = true,
    args_conflicts_with_subcommands = true
)]
struct Cli {
    /// Rerun the configuration embedded in an output file (or a JSON config).
    #[arg(long)]
    replay: Option<PathBuf>,
    /// With --replay: write here instead of the recorded output path.
    #[arg(long, requires = "replay")]
    replay_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn invocation(cli: Cli) -> anyhow::Result<Invocation> {
    match (cli.replay, cli.command) {
        (Some(path), _) => Ok(Invocation {
            config: RunConfig::from_file(&path)?,
            workers: 0,
            destination: cli.replay_out,
        }),
        (None, Some(cmd)) => {
            let (config, workers) = cmd.into_config();
            Ok(Invocation {
                config,
                workers,
                destination: None,
            })
        }
        (None, None) => Err(CliError::Usage("a subcommand or --replay is required".into()).into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match invocation(cli).and_then(|inv| commands::run(&inv)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
