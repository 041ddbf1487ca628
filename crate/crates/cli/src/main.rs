use clap::Parser;
use std::process::ExitCode;

use twstrs_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match twstrs_cli::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {} ({})", e, cli.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
