use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::CliError;

/// Environment variable naming the default directory for outputs.
pub const OUT_DIR_ENV: &str = "CELLPLAN_OUT_DIR";

/// Values from a TOML config file, looked up in the `[command]` table first
/// and then at top level. Keys are the long flag names.
#[derive(Debug, Default)]
pub struct Config {
    root: toml::Table,
    command: String,
}

impl Config {
    pub fn load(path: Option<&Path>, command: &str) -> Result<Self, CliError> {
        let root = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::io(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::usage(format!("config {}: {e}", p.display())))?
            }
        };
        Ok(Self {
            root,
            command: command.into(),
        })
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.root
            .get(&self.command)
            .and_then(|t| t.as_table())
            .and_then(|t| t.get(key))
            .or_else(|| self.root.get(key).filter(|v| !v.is_table()))
    }

    /// Flag value if given, else the config value, else `None`.
    pub fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.lookup(key) {
            None => Ok(None),
            Some(v) => v
                .clone()
                .try_into()
                .map(Some)
                .map_err(|e| CliError::usage(format!("config key '{key}': {e}"))),
        }
    }

    pub fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T, CliError> {
        self.opt(flag, key)?
            .ok_or_else(|| CliError::usage(format!("missing required option --{key}")))
    }
}

/// Resolves an output path: explicit paths are used as given, otherwise
/// `default_name` is placed in `$CELLPLAN_OUT_DIR` (or the working directory).
pub fn output_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir).join(default_name),
        _ => PathBuf::from(default_name),
    })
}
