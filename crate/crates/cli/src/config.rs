//! `key = value` config files layered under command-line flags.
//!
//! A key names a long flag (`seed = 7` means `--seed 7`). Keys may be
//! scoped to one subcommand with a dotted prefix (`gen.workers = 4`).
//! Unscoped keys the current subcommand does not accept are ignored;
//! scoped keys must exist. Boolean flags take `true` or `false`.

use std::path::Path;

use clap::{ArgAction, Command};

use crate::Failure;

#[derive(Debug, PartialEq)]
pub struct Entry {
    pub scope: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

pub fn parse(text: &str) -> Result<Vec<Entry>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Failure::usage(format!("config line {}: expected key = value", i + 1)));
        };
        let (scope, key) = match k.trim().split_once('.') {
            Some((s, k)) => (Some(s.trim().to_string()), k.trim()),
            None => (None, k.trim()),
        };
        if key.is_empty() {
            return Err(Failure::usage(format!("config line {}: empty key", i + 1)));
        }
        out.push(Entry {
            scope,
            key: key.to_string(),
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<Entry>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Core(io_error(path, e)))?;
    parse(&text)
}

fn io_error(path: &Path, source: std::io::Error) -> ssimqa::Error {
    ssimqa::Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Flag tokens for `sub` derived from `entries`, to be placed before the
/// user's own flags so later (user) occurrences win.
pub fn to_args(entries: &[Entry], sub: &Command) -> Result<Vec<String>, Failure> {
    let name = sub.get_name();
    let mut args = Vec::new();
    for e in entries {
        if e.scope.as_deref().is_some_and(|s| s != name) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(e.key.as_str()) && a.get_id() != "config");
        let Some(arg) = arg else {
            if e.scope.is_some() {
                return Err(Failure::usage(format!(
                    "config line {}: '{name}' has no flag --{}",
                    e.line, e.key
                )));
            }
            continue;
        };
        match arg.get_action() {
            ArgAction::SetTrue => match e.value.as_str() {
                "true" => args.push(format!("--{}", e.key)),
                "false" => {}
                other => {
                    return Err(Failure::usage(format!(
                        "config line {}: --{} expects true or false, got '{other}'",
                        e.line, e.key
                    )))
                }
            },
            _ => args.push(format!("--{}={}", e.key, e.value)),
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Arg;

    fn sub() -> Command {
        Command::new("gen")
            .arg(Arg::new("seed").long("seed"))
            .arg(Arg::new("no-augment").long("no-augment").action(ArgAction::SetTrue))
    }

    #[test]
    fn parses_scopes_and_comments() {
        let e = parse("# hi\nseed = 7\n\ngen.workers=4 # trailing\n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "seed");
        assert_eq!(e[1].scope.as_deref(), Some("gen"));
        assert_eq!(e[1].value, "4");
        assert!(parse("just words").is_err());
    }

    #[test]
    fn maps_to_flags() {
        let e = parse("seed = 7\nno-augment = true\nmap = x.png\nssim.map = y.png").unwrap();
        assert_eq!(to_args(&e, &sub()).unwrap(), ["--seed=7", "--no-augment"]);
        let bad = parse("gen.bogus = 1").unwrap();
        assert!(to_args(&bad, &sub()).is_err());
        let bad = parse("no-augment = yes").unwrap();
        assert!(to_args(&bad, &sub()).is_err());
    }
}
