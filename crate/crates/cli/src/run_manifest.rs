//! Per-run record of every effective parameter, written next to the outputs.

use serde::Serialize;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const FILE_NAME: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest<'a, P: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub modules: Modules,
    pub command: &'a str,
    pub seed: Option<u64>,
    pub parameters: &'a P,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Modules {
    pub core: &'static str,
    pub cli: &'static str,
}

impl<'a, P: Serialize> RunManifest<'a, P> {
    pub fn new(command: &'a str, seed: Option<u64>, parameters: &'a P, outputs: Vec<String>) -> Self {
        RunManifest {
            tool: "twstrs",
            version: env!("CARGO_PKG_VERSION"),
            modules: Modules {
                core: twstrs_core::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            command,
            seed,
            parameters,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
