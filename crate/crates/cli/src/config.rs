//! Flat `key = value` config files whose keys mirror long flag names.
//!
//! The file is expanded into flags and spliced in right after the
//! subcommand, so any flag given on the command line lands later in argv and
//! overrides it.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Finds `--config PATH` / `--config=PATH` in raw argv.
fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut found = None;
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let Some(s) = arg.to_str() else { continue };
        if s == "--" {
            break;
        }
        if s == "--config" {
            found = iter.next().cloned();
        } else if let Some(rest) = s.strip_prefix("--config=") {
            found = Some(rest.into());
        }
    }
    found
}

/// Turns a config document into flags.
pub fn config_to_args(text: &str) -> Result<Vec<String>, CliError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e| CliError::usage(format!("config: {e}")))?;
    let mut out = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            return Err(CliError::usage(
                "config: nested 'config' key is not allowed",
            ));
        }
        match value {
            toml::Value::Boolean(true) => out.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::String(s) => out.extend([flag, s]),
            toml::Value::Integer(i) => out.extend([flag, i.to_string()]),
            toml::Value::Float(f) => out.extend([flag, format!("{f:e}")]),
            toml::Value::Array(items) => {
                // only used for `deadtimes`
                let parts: Result<Vec<String>, CliError> = items
                    .iter()
                    .map(|v| match v {
                        toml::Value::Float(f) => Ok(format!("{f:e}")),
                        toml::Value::Integer(i) => Ok(i.to_string()),
                        _ => Err(CliError::usage(format!(
                            "config: '{key}' must hold numbers"
                        ))),
                    })
                    .collect();
                out.extend([flag, parts?.join(",")]);
            }
            _ => {
                return Err(CliError::usage(format!(
                    "config: unsupported value for '{key}'"
                )))
            }
        }
    }
    Ok(out)
}

fn read_config(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
    config_to_args(&text)
}

/// Returns argv with config-file flags inserted after the subcommand name.
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = find_config(&args) else {
        return Ok(args);
    };
    let extra = read_config(Path::new(&path))?;
    // argv[0] is the binary, argv[1] the subcommand
    let split = args.len().min(2);
    let mut out: Vec<OsString> = args[..split].to_vec();
    out.extend(extra.into_iter().map(OsString::from));
    out.extend_from_slice(&args[split..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_and_bool_keys() {
        let args = config_to_args("n = 6\nmode = \"cw\"\njson = true\nseed = 3\ndeadtime = 5e-8\n")
            .unwrap();
        let joined = args.join(" ");
        assert!(joined.contains("--n 6"));
        assert!(joined.contains("--mode cw"));
        assert!(joined.contains("--json"));
        assert!(joined.contains("--deadtime 5e-8"));
    }

    #[test]
    fn underscores_become_hyphens() {
        let args = config_to_args("n_events = 1000").unwrap();
        assert_eq!(args, vec!["--n-events", "1000"]);
    }

    #[test]
    fn false_flag_is_dropped() {
        assert!(config_to_args("json = false").unwrap().is_empty());
    }

    #[test]
    fn arrays_join_with_commas() {
        let args = config_to_args("deadtimes = [5e-8, 2.5e-8]").unwrap();
        assert_eq!(args, vec!["--deadtimes", "5e-8,2.5e-8"]);
    }

    #[test]
    fn finds_both_spellings() {
        let a: Vec<OsString> = ["muxdt", "dtf-curve", "--config", "x.toml"]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(find_config(&a), Some("x.toml".into()));
        let b: Vec<OsString> = ["muxdt", "figure", "--config=y.toml"]
            .iter()
            .map(OsString::from)
            .collect();
        assert_eq!(find_config(&b), Some("y.toml".into()));
    }

    #[test]
    fn rejects_garbage() {
        assert!(config_to_args("this is not toml").is_err());
    }
}
