mod args;
mod config;
mod error;
mod inputs;
mod run;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

use args::{Cli, Command};
use error::{CliError, CliResult};
use run::Outcome;

fn parse(argv: &[OsString]) -> Result<Cli, i32> {
    match Cli::try_parse_from(argv) {
        Ok(cli) => Ok(cli),
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            Err(0)
        }
        Err(e) => {
            eprintln!("{}", CliError::Usage(sweep::first_line(&e.to_string())).line());
            Err(1)
        }
    }
}

/// Re-parses with the config file's keys spliced in ahead of the explicit flags.
fn with_config(argv: &[OsString], cli: Cli) -> CliResult<Cli> {
    let Some(path) = cli.global.config.clone() else {
        return Ok(cli);
    };
    if matches!(cli.command, Command::Sweep { .. }) {
        return Ok(cli);
    }
    let table = config::load(&path)?;
    let extra = config::tokens(&table, &["run", "config", "command"])?;
    let merged = config::splice(argv, &config::command_path(&cli.command), extra);
    Cli::try_parse_from(merged).map_err(|e| CliError::Config(sweep::first_line(&e.to_string())))
}

fn json_text(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

fn write_outcome(dir: &Path, outcome: &Outcome) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), json_text(&outcome.report))?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents)?;
    }
    let curves: Vec<&str> = outcome.files.iter().map(|(n, _)| n.as_str()).collect();
    fs::write(
        dir.join("manifest.json"),
        json_text(&json!({ "report": "report.json", "curves": curves })),
    )?;
    Ok(())
}

fn run(argv: Vec<OsString>) -> CliResult<i32> {
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let cli = with_config(&argv, cli)?;
    let out = cli.global.out.clone();
    if let Command::Sweep { config_file, jobs } = &cli.command {
        let runs = sweep::sweep(config_file, *jobs, &cli.global)?;
        if let Some(dir) = &out {
            for r in &runs {
                if let Some(o) = &r.outcome {
                    write_outcome(&dir.join(format!("run-{:03}", r.index)), o)?;
                }
            }
            fs::create_dir_all(dir)?;
            fs::write(dir.join("sweep.json"), json_text(&runs))?;
        }
        std::io::stdout().write_all(json_text(&runs).as_bytes())?;
        let code = if runs.iter().any(|r| r.exit == 1) {
            1
        } else if runs.iter().any(|r| r.exit == 2) {
            2
        } else {
            0
        };
        return Ok(code);
    }
    let outcome = run::execute(&cli.command, &cli.global)?;
    if let Some(dir) = &out {
        write_outcome(dir, &outcome)?;
    }
    std::io::stdout().write_all(json_text(&outcome.report).as_bytes())?;
    Ok(outcome.exit)
}

fn main() {
    let code = match run(std::env::args_os().collect()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.line());
            1
        }
    };
    std::process::exit(code);
}
