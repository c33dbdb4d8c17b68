//! Config files: `key = value` lines standing in for subcommand flags.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are flag names
//! without the leading dashes (`max-token-freq` or `max_token_freq`). A key
//! that no subcommand knows is an error; a key that only other subcommands
//! know is skipped, so one file can serve a whole pipeline.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::args::Cli;

#[derive(Debug, PartialEq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>, String> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        entries.push(ConfigEntry {
            line: i + 1,
            key,
            value: value.trim().to_owned(),
        });
    }
    Ok(entries)
}

/// Removes `--config FILE` from `args` and splices the file's entries in
/// right after the subcommand name, ahead of the explicit flags.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut path: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--config" {
            let value = args
                .get(i + 1)
                .ok_or("--config needs a file argument")?
                .clone();
            path = Some(value.into());
            args.drain(i..i + 2);
        } else if let Some(value) = arg.strip_prefix("--config=") {
            path = Some(value.into());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| format!("config file {}: {e}", path.display()))?;
    let entries = parse_config(&text).map_err(|e| format!("config file {}: {e}", path.display()))?;

    let command = Cli::command();
    let names: BTreeSet<String> = command
        .get_subcommands()
        .map(|s| s.get_name().to_owned())
        .collect();
    let Some(position) = args
        .iter()
        .position(|a| names.contains(a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let name = args[position].to_string_lossy().into_owned();
    let sub = command
        .find_subcommand(&name)
        .expect("position found by name");
    let known: BTreeSet<&str> = command
        .get_subcommands()
        .flat_map(|s| s.get_arguments())
        .filter_map(|a| a.get_long())
        .collect();

    let mut inserted = Vec::new();
    for entry in entries {
        if !known.contains(entry.key.as_str()) {
            return Err(format!(
                "config file {}: line {}: unknown key `{}`",
                path.display(),
                entry.line,
                entry.key
            ));
        }
        let Some(arg) = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(entry.key.as_str()))
        else {
            continue;
        };
        if arg.get_action().takes_values() {
            inserted.push(OsString::from(format!("--{}={}", entry.key, entry.value)));
        } else {
            match entry.value.as_str() {
                "true" | "yes" | "1" => inserted.push(OsString::from(format!("--{}", entry.key))),
                "false" | "no" | "0" => {}
                other => {
                    return Err(format!(
                        "config file {}: line {}: `{}` expects true or false, found `{other}`",
                        path.display(),
                        entry.line,
                        entry.key
                    ))
                }
            }
        }
    }
    args.splice(position + 1..position + 1, inserted);
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(args: &[&str]) -> Vec<OsString> {
        args.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_comments_and_underscores() {
        let entries = parse_config("# pipeline\n\nmax_token_freq = 10\nseed=7\n").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "max-token-freq");
        assert_eq!(entries[1].value, "7");
        assert!(parse_config("seed 7").is_err());
    }

    #[test]
    fn file_entries_precede_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "k = 20\nseed = 1\nlexical-threshold = 0.7\nsupports-top-k = true\n").unwrap();
        let args = os(&["codeconcept", "--config", file.to_str().unwrap(), "discover", "--seed", "9"]);
        let expanded = expand_args(args).unwrap();
        assert_eq!(expanded, os(&["codeconcept", "discover", "--k=20", "--seed=1", "--seed", "9"]));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.conf");
        fs::write(&file, "clusters-per-layer = 3\n").unwrap();
        let args = os(&["codeconcept", "discover", &format!("--config={}", file.display())]);
        assert!(expand_args(args).unwrap_err().contains("unknown key"));
    }
}
