//! `--config` files: flat `key = value` lines merged into argv before parsing.
//!
//! A key fills in `--key value` only when the flag is absent from the command
//! line, so flags win over the file and the file wins over built-in defaults.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{ArgAction, Command};

#[derive(Debug, PartialEq)]
pub struct ConfigError(pub String);

fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                i + 1
            )));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigError(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError(format!("{}:{}: duplicate key `{key}`", path.display(), i + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Globals that take a value, so their value is not mistaken for the subcommand.
const GLOBAL_VALUED: [&str; 2] = ["--threads", "--config"];

struct Scan {
    config: Option<String>,
    subcommand: Option<usize>,
    present: BTreeSet<String>,
}

fn scan(args: &[String]) -> Scan {
    let mut s = Scan {
        config: None,
        subcommand: None,
        present: BTreeSet::new(),
    };
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--" {
            break;
        }
        if let Some(flag) = a.strip_prefix("--") {
            let (name, inline) = match flag.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (flag, None),
            };
            s.present.insert(name.to_string());
            if name == "config" {
                s.config = inline.or_else(|| args.get(i + 1).cloned());
            }
            if s.subcommand.is_none() && GLOBAL_VALUED.contains(&a.as_str()) {
                i += 1;
            }
        } else if s.subcommand.is_none() && !a.starts_with('-') {
            s.subcommand = Some(i);
        }
        i += 1;
    }
    s
}

fn is_flag(cmd: &Command, long: &str) -> Option<bool> {
    cmd.get_arguments()
        .find(|a| a.get_long() == Some(long))
        .map(|a| matches!(a.get_action(), ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count))
}

/// Returns `args` with config-file values injected after the subcommand.
pub fn apply(cmd: &Command, args: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let s = scan(&args);
    let Some(path) = s.config.clone() else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("config {}: {e}", path.display())))?;
    let entries = parse(&text, path)?;
    let Some(sub_idx) = s.subcommand else {
        return Ok(args);
    };
    let Some(sub) = cmd.find_subcommand(&args[sub_idx]) else {
        return Ok(args);
    };
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(ConfigError("config files cannot include other config files".into()));
        }
        let target = if sub.get_arguments().any(|a| a.get_long() == Some(key.as_str())) {
            sub
        } else if cmd.get_arguments().any(|a| a.get_long() == Some(key.as_str())) {
            cmd
        } else if cmd
            .get_subcommands()
            .any(|c| c.get_arguments().any(|a| a.get_long() == Some(key.as_str())))
        {
            continue;
        } else {
            return Err(ConfigError(format!("config key `{key}` is not a flag of any subcommand")));
        };
        if s.present.contains(&key) {
            continue;
        }
        match is_flag(target, &key) {
            Some(true) => match value.as_str() {
                "true" | "on" | "yes" | "1" => extra.push(format!("--{key}")),
                "false" | "off" | "no" | "0" => {}
                other => return Err(ConfigError(format!("config key `{key}`: expected a boolean, got `{other}`"))),
            },
            _ => {
                extra.push(format!("--{key}"));
                extra.push(value);
            }
        }
    }
    let mut out = args;
    let insert_at = out.iter().position(|a| a == "--").unwrap_or(out.len());
    out.splice(insert_at..insert_at, extra);
    Ok(out)
}

pub fn args_from_env() -> Result<Vec<String>, ConfigError> {
    std::env::args_os()
        .map(|a: OsString| {
            a.into_string()
                .map_err(|a| ConfigError(format!("argument is not valid UTF-8: {a:?}")))
        })
        .collect()
}
