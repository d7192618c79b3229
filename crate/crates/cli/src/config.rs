//! TOML configuration. Keys are flag names; they are spliced in ahead of the command line so
//! that explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use toml::{Table, Value};

use crate::args::{CheckKind, Command, CosmicOp, GlobalArgs};
use crate::error::{CliError, CliResult};

pub fn load(path: &Path) -> CliResult<Table> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))
}

fn scalar(key: &str, v: &Value) -> CliResult<Option<String>> {
    Ok(match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(_) => None,
        _ => {
            return Err(CliError::Config(format!(
                "key '{key}' must be a string, number or boolean"
            )))
        }
    })
}

/// `--key=value` tokens for every scalar entry, skipping `skip` keys.
pub fn tokens(table: &Table, skip: &[&str]) -> CliResult<Vec<OsString>> {
    let mut out = Vec::new();
    for (key, v) in table {
        if skip.contains(&key.as_str()) {
            continue;
        }
        if v == &Value::Boolean(false) {
            continue;
        }
        out.push(OsString::from(match scalar(key, v)? {
            Some(s) => format!("--{key}={s}"),
            None => format!("--{key}"),
        }));
    }
    Ok(out)
}

/// Subcommand words of a parsed command.
pub fn command_path(c: &Command) -> Vec<&'static str> {
    match c {
        Command::Check { kind } => vec![
            "check",
            match kind {
                CheckKind::Huber(_) => "huber",
                CheckKind::Bol(_) => "bol",
                CheckKind::Alexandrov(_) => "alexandrov",
                CheckKind::Pointwise(_) => "pointwise",
            },
        ],
        Command::Rearrange(_) => vec!["rearrange"],
        Command::Cosmic { op } => vec![
            "cosmic",
            match op {
                CosmicOp::Solve(_) => "solve",
                CosmicOp::Mass { .. } => "mass",
                CosmicOp::Kelvin { .. } => "kelvin",
                CosmicOp::Aux { .. } => "aux",
                CosmicOp::Floors { .. } => "floors",
            },
        ],
        Command::Sweep { .. } => vec!["sweep"],
    }
}

/// `argv` with `extra` placed right after the subcommand words.
pub fn splice(argv: &[OsString], path: &[&str], extra: Vec<OsString>) -> Vec<OsString> {
    let mut rest: Vec<OsString> = argv.iter().skip(1).cloned().collect();
    for word in path {
        if let Some(pos) = rest.iter().position(|t| t == word) {
            rest.remove(pos);
        }
    }
    let mut out = vec![argv[0].clone()];
    out.extend(path.iter().map(OsString::from));
    out.extend(extra);
    out.extend(rest);
    out
}

/// Global flags given on the sweep command line, forwarded to every run.
pub fn global_tokens(g: &GlobalArgs) -> Vec<OsString> {
    let mut out = Vec::new();
    if let Some(n) = g.n {
        out.extend(["--n".into(), n.to_string().into()]);
    }
    if let Some(t) = g.tol {
        out.extend(["--tol".into(), t.to_string().into()]);
    }
    if let Some(s) = g.seed {
        out.extend(["--seed".into(), s.to_string().into()]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_keep_negative_values_attached() {
        let t: Table = "N = -0.5\nfield = \"zero\"\nquiet = false\nloud = true\nskip = 1\n"
            .parse()
            .unwrap();
        let got = tokens(&t, &["skip"]).unwrap();
        assert_eq!(got, ["--N=-0.5", "--field=zero", "--loud"].map(OsString::from));
        let bad: Table = "domain = [1]\n".parse().unwrap();
        assert!(tokens(&bad, &[]).is_err());
    }

    #[test]
    fn splice_puts_defaults_before_explicit_flags() {
        let argv = ["liouville", "--n", "64", "check", "bol", "--field", "zero"].map(OsString::from);
        let out = splice(&argv, &["check", "bol"], vec!["--field=bubble:1".into()]);
        let want = [
            "liouville",
            "check",
            "bol",
            "--field=bubble:1",
            "--n",
            "64",
            "--field",
            "zero",
        ]
        .map(OsString::from);
        assert_eq!(out, want);
    }
}
