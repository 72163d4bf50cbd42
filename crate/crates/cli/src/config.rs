//! `key = value` defaults files.

use std::collections::BTreeMap;
use std::path::Path;

use crate::CliError;

/// Keys accepted in a config file. Each matches the long flag of the same name.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "beta",
    "seed",
    "threads",
    "out",
    "n-min",
    "n-max",
    "n-points",
    "grid",
    "random",
    "method",
    "samples",
    "refinement",
    "point",
    "bandwidth",
    "sample-size",
    "replicates",
    "truth",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected `key = value`", k + 1))
            })?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    k + 1
                )));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if given, else the config value, else `default`.
    pub fn pick<T, F>(
        &self,
        flag: Option<T>,
        key: &str,
        parse: F,
        default: T,
    ) -> Result<T, CliError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        self.pick_opt(flag, key, parse)
            .map(|v| v.unwrap_or(default))
    }

    pub fn pick_opt<T, F>(
        &self,
        flag: Option<T>,
        key: &str,
        parse: F,
    ) -> Result<Option<T>, CliError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match (flag, self.get(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(raw)) => parse(raw)
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))),
            (None, None) => Ok(None),
        }
    }
}
