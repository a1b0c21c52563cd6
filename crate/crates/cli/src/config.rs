//! Layered settings: flag, then `[command]` table, then top-level key.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::{CliError, CliResult};

pub const OUT_DIR_ENV: &str = "RHOGNF_OUT_DIR";

#[derive(Debug, Default)]
pub struct Layers {
    top: toml::Table,
    section: toml::Table,
    source: Option<PathBuf>,
}

impl Layers {
    pub fn load(path: Option<&Path>, command: &str) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut top: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let section = match top.remove(command) {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(CliError::Usage(format!("config key `{command}` must be a table"))),
            None => toml::Table::new(),
        };
        Ok(Self { top, section, source: Some(path.to_path_buf()) })
    }

    fn lookup<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        let Some(v) = self.section.get(key).or_else(|| self.top.get(key)) else {
            return Ok(None);
        };
        v.clone()
            .try_into()
            .map(Some)
            .map_err(|e| CliError::Usage(format!("config key `{key}`: {e}")))
    }

    /// The flag if given, else the config value.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.lookup(key),
        }
    }

    pub fn pick_or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<T> {
        self.pick(flag, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting `--{}`", key.replace('_', "-"))))
    }

    /// Paths in the config file are relative to the file itself.
    pub fn pick_path(&self, flag: Option<PathBuf>, key: &str) -> CliResult<Option<PathBuf>> {
        if flag.is_some() {
            return Ok(flag);
        }
        let path: Option<PathBuf> = self.lookup(key)?;
        Ok(path.map(|p| match self.source.as_ref().and_then(|s| s.parent()) {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        }))
    }

    pub fn out_dir(&self, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        if let Some(dir) = self.pick_path(flag, "out_dir")? {
            return Ok(dir);
        }
        Ok(std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from))
    }
}
