//! Config files are TOML. Experiment and phase specs deserialize from them
//! directly; for the other subcommands every top-level `key = value` becomes
//! a `--key value` option unless that option is already on the command line.

use std::path::Path;

use serde::de::DeserializeOwned;
use toml::Value;

use crate::error::{Error, Result};

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_toml(&text)
}

pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Integer(i) => Some(i.to_string()),
        Value::Float(f) => Some(f.to_string()),
        Value::Boolean(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Turns a flat config table into option tokens, skipping options named in
/// `present`. Booleans become bare flags; arrays are comma-joined.
pub fn config_tokens(text: &str, present: &[String]) -> Result<Vec<String>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut out = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        if present.iter().any(|p| p == &flag || p.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value {
            Value::Boolean(true) => out.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                let parts: Option<Vec<String>> = items.iter().map(scalar).collect();
                let parts = parts.ok_or_else(|| Error::Config(format!("{key}: arrays must hold scalars")))?;
                out.push(flag);
                out.push(parts.join(","));
            }
            other => {
                let v = scalar(other).ok_or_else(|| Error::Config(format!("{key}: nested tables are not options")))?;
                out.push(flag);
                out.push(v);
            }
        }
    }
    Ok(out)
}

/// Value of `--config` in raw arguments, if any.
pub fn find_config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = a.strip_prefix("--config=") {
            return Some(rest.to_string());
        }
    }
    None
}
