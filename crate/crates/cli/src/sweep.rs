//! Independent runs from one TOML file, fanned out over a bounded worker pool.

use std::ffi::OsString;
use std::path::Path;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use toml::Table;

use crate::args::{Cli, Command, GlobalArgs};
use crate::config;
use crate::error::{CliError, CliResult};
use crate::run::{execute, Outcome};

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub index: usize,
    pub command: String,
    pub exit: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub outcome: Option<Outcome>,
}

/// argv for one `[[run]]` entry: command words, file defaults, the run's keys, then command-line globals.
fn run_argv(defaults: &Table, run: &Table, globals: &[OsString]) -> CliResult<(String, Vec<OsString>)> {
    let Some(command) = run.get("command").and_then(|v| v.as_str()) else {
        return Err(CliError::Config("every [[run]] needs a string 'command'".into()));
    };
    let mut argv: Vec<OsString> = vec!["liouville".into()];
    argv.extend(command.split_whitespace().map(OsString::from));
    argv.extend(config::tokens(defaults, &["run", "out", "config"])?);
    argv.extend(config::tokens(run, &["command", "out", "config"])?);
    argv.extend(globals.iter().cloned());
    Ok((command.to_string(), argv))
}

fn run_one(index: usize, command: String, argv: CliResult<Vec<OsString>>) -> RunSummary {
    let result = argv.and_then(|argv| {
        let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(first_line(&e.to_string())))?;
        if matches!(cli.command, Command::Sweep { .. }) {
            return Err(CliError::Usage("sweep cannot be nested".into()));
        }
        execute(&cli.command, &cli.global)
    });
    match result {
        Ok(o) => RunSummary {
            index,
            command,
            exit: o.exit,
            report: Some(o.report.clone()),
            error: None,
            outcome: Some(o),
        },
        Err(e) => RunSummary {
            index,
            command,
            exit: 1,
            report: None,
            error: Some(e.line()),
            outcome: None,
        },
    }
}

pub fn first_line(s: &str) -> String {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim()
        .trim_start_matches("error: ")
        .to_string()
}

pub fn sweep(path: &Path, jobs: Option<usize>, global: &GlobalArgs) -> CliResult<Vec<RunSummary>> {
    let table = config::load(path)?;
    let runs = match table.get("run") {
        Some(toml::Value::Array(a)) => a.clone(),
        _ => return Err(CliError::Config(format!("{} has no [[run]] entries", path.display()))),
    };
    let globals = config::global_tokens(global);
    let prepared: Vec<(String, CliResult<Vec<OsString>>)> = runs
        .iter()
        .map(|r| match r.as_table() {
            Some(t) => match run_argv(&table, t, &globals) {
                Ok((c, argv)) => (c, Ok(argv)),
                Err(e) => (
                    t.get("command").and_then(|v| v.as_str()).unwrap_or("").to_string(),
                    Err(e),
                ),
            },
            None => (
                String::new(),
                Err(CliError::Config("[[run]] entries must be tables".into())),
            ),
        })
        .collect();
    let threads = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start workers: {e}")))?;
    Ok(pool.install(|| {
        prepared
            .into_par_iter()
            .enumerate()
            .map(|(i, (c, argv))| run_one(i, c, argv))
            .collect()
    }))
}
