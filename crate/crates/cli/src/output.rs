use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

/// Embedded in every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    /// SHA-256 of the resolved configuration, serialised as JSON.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: &'static str,
}

impl Provenance {
    pub fn of<C: Serialize>(config: &C, seed: Option<u64>) -> CliResult<Self> {
        let bytes = serde_json::to_vec(config).map_err(|e| CliError::Usage(e.to_string()))?;
        let digest = Sha256::digest(&bytes);
        let config_hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        Ok(Self { config_hash, seed, version: env!("CARGO_PKG_VERSION") })
    }
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: PathBuf) -> CliResult<Self> {
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Data(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self(dir))
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.0.join(file)
    }

    pub fn write_json<T: Serialize>(&self, file: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write_text(file, &text)
    }

    pub fn write_text(&self, file: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(file);
        write_file(&path, text)?;
        Ok(path)
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}
