//! Layered settings: built-in defaults, then the TOML config file, then
//! `--set key=value` overrides, then explicit flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub confidence: Option<f64>,
    pub chunks: Option<usize>,
    pub chunk_size: Option<usize>,
    pub target_rate: Option<f64>,
    pub horizon: Option<usize>,
    pub seeds: Option<u64>,
    pub episodes_per_dataset: Option<usize>,
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub cap: BTreeMap<String, f64>,
    #[serde(default)]
    pub category: BTreeMap<String, String>,
}

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_CHUNKS: usize = 6;
pub const DEFAULT_CHUNK_SIZE: usize = 12;
pub const DEFAULT_TARGET_RATE: f64 = 10.0;
pub const DEFAULT_HORIZON: usize = 16;
pub const DEFAULT_SEEDS: u64 = 3;
pub const DEFAULT_EPISODES_PER_DATASET: usize = 2;
pub const DEFAULT_TIMEOUT_SECS: f64 = 60.0;

fn parse_override(entry: &str) -> Result<(String, toml::Value), CliError> {
    let (key, value) =
        entry.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{entry}`")))?;
    let key = key.trim();
    let value = value.trim();
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

impl Settings {
    pub fn load(file: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                text.parse::<toml::Table>().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => toml::Table::new(),
        };
        for entry in overrides {
            let (key, value) = parse_override(entry)?;
            match key.split_once('.') {
                Some((section, sub)) => {
                    let slot =
                        table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
                    match slot {
                        toml::Value::Table(t) => {
                            t.insert(sub.to_string(), value);
                        }
                        _ => return Err(CliError::Usage(format!("`{section}` is not a table"))),
                    }
                }
                None => {
                    table.insert(key, value);
                }
            }
        }
        Settings::deserialize(table).map_err(|e| CliError::Usage(format!("settings: {e}")))
    }
}

/// Splits `name=value` pairs from repeatable flags.
pub fn parse_pairs(entries: &[String], flag: &str) -> Result<Vec<(String, String)>, CliError> {
    entries
        .iter()
        .map(|e| {
            e.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| CliError::Usage(format!("--{flag} expects NAME=VALUE, got `{e}`")))
        })
        .collect()
}

pub fn parse_number_pairs(entries: &[String], flag: &str) -> Result<Vec<(String, f64)>, CliError> {
    parse_pairs(entries, flag)?
        .into_iter()
        .map(|(k, v)| {
            v.parse::<f64>().map(|n| (k, n)).map_err(|_| CliError::Usage(format!("--{flag}: `{v}` is not a number")))
        })
        .collect()
}
