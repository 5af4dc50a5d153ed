//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are skipped. Keys are the long
//! flag names of the chosen subcommand without the leading dashes. A value of
//! `true` or `false` switches a boolean flag.

use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    Unreadable { path: String, reason: String },
    Syntax { path: String, line: usize, text: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Unreadable { path, reason } => {
                write!(f, "cannot read config file {path}: {reason}")
            }
            ConfigError::Syntax { path, line, text } => {
                write!(f, "config file {path}, line {line}: expected `key = value`, found `{text}`")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses config text into `(key, value)` pairs in file order.
pub fn parse_config(text: &str, path: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = || ConfigError::Syntax {
            path: path.to_string(),
            line: i + 1,
            text: line.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(syntax)?;
        let key = key.trim().trim_start_matches("--");
        let value = value.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(syntax());
        }
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
        path: shown.clone(),
        reason: e.to_string(),
    })?;
    parse_config(&text, &shown)
}

/// Turns pairs into command-line tokens.
pub fn to_args(pairs: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => {
                args.push(format!("--{k}"));
                args.push(v.clone());
            }
        }
    }
    args
}
