//! `tiaug`: file-based pipeline from raw interaction logs to augmentation
//! experiments. Run `tiaug --help` for the subcommands.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::Cli;
use commands::{command_name, dispatch, Context};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

fn report(kind: &str, message: &str, code: u8) -> ExitCode {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::from(code)
}

fn run(cli: Cli, argv: Vec<String>) -> tiaug::Result<()> {
    let name = command_name(&cli.command);
    let mut ctx = Context::new(cli.seed, cli.config.as_deref(), &cli.out_dir)?;
    let outcome = dispatch(&mut ctx, &cli.command)?;
    let config = json!({
        "augment_config_file": ctx.augment.to_kv_string(),
        "command": outcome.config,
    });
    ctx.rec.finish(name, argv, ctx.seed, config)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                return report("usage", "missing subcommand; see `tiaug --help`", EXIT_USAGE);
            }
            _ => {
                let rendered = e.render().to_string();
                let first = rendered.lines().next().unwrap_or("usage error");
                return report("usage", first.trim_start_matches("error: "), EXIT_USAGE);
            }
        },
    };
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if matches!(e, tiaug::Error::Config(_)) { EXIT_CONFIG } else { EXIT_RUNTIME };
            report(e.kind(), &e.to_string(), code)
        }
    }
}
