//! Command-line front end: batch subcommands and the rating-study server.

pub mod args;
pub mod commands;
pub mod error;
pub mod run_manifest;
pub mod server;

use args::Command;
use error::CliResult;

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Generate(a) => commands::generate(a),
        Command::Render(a) => commands::render(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Agreement(a) => commands::agreement(a),
        Command::Timeline(a) => commands::timeline(a),
        Command::Serve(a) => server::serve(a),
    }
}
