//! Key-value config files. Lines look like `epochs = 400`; `#` starts a
//! comment. Keys use the long flag names without the `--`. Flags given on
//! the command line always win over the file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config line {}: expected `key = value`, got {line:?}",
                    no + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// flag > config > default
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    /// flag > config > None
    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if let Some(v) = flag {
            return Ok(Some(v));
        }
        match self.get(key) {
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::usage(format!("config key {key}: bad value {raw:?}"))),
            None => Ok(None),
        }
    }

    pub fn pick_path(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>, CliError> {
        match flag {
            Some(p) => Ok(Some(p)),
            None => Ok(self.get(key).map(PathBuf::from)),
        }
    }

    pub fn require_path(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.pick_path(flag, key)?
            .ok_or_else(|| CliError::usage(format!("--{key} is required")))
    }
}

/// Comma-separated positive integers, e.g. `--depths 2,4,6`.
pub fn parse_usize_list(raw: &str, what: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("bad {what} entry {s:?}")))
        })
        .collect()
}

/// Comma-separated cell ids, `None` when empty/absent.
pub fn parse_cells(raw: Option<&str>) -> Option<Vec<String>> {
    let raw = raw?;
    let cells: Vec<String> = raw
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if cells.is_empty() {
        None
    } else {
        Some(cells)
    }
}
