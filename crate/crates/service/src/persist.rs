//! On-disk configuration: versioned, pretty-printed JSON written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use cablebot_core::controller::{ConfigSink, RobotConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    En,
    Fr,
}

/// The configuration file. Keys are written in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistedConfig {
    pub schema_version: u64,
    #[serde(flatten)]
    pub robot: RobotConfig,
    #[serde(default)]
    pub ui_default_language: Language,
}

impl Default for PersistedConfig {
    fn default() -> Self {
        PersistedConfig::new(RobotConfig::default(), Language::En)
    }
}

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: malformed configuration: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: missing integer schema_version")]
    MissingVersion { path: PathBuf },
    #[error("{path}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion { path: PathBuf, found: u64 },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl PersistedConfig {
    pub fn new(robot: RobotConfig, ui_default_language: Language) -> Self {
        PersistedConfig {
            schema_version: SCHEMA_VERSION,
            robot,
            ui_default_language,
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("config serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Checks `schema_version` before looking at anything else.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, PersistError> {
        let parse = |source| PersistError::Parse {
            path: path.to_path_buf(),
            source,
        };
        let value: serde_json::Value = serde_json::from_slice(bytes).map_err(parse)?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            None => {
                return Err(PersistError::MissingVersion {
                    path: path.to_path_buf(),
                })
            }
            Some(SCHEMA_VERSION) => {}
            Some(found) => {
                return Err(PersistError::UnsupportedVersion {
                    path: path.to_path_buf(),
                    found,
                })
            }
        }
        let config: PersistedConfig = serde_json::from_value(value).map_err(parse)?;
        config.robot.validate().map_err(|e| PersistError::Invalid {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(config)
    }
}

pub fn load_config(path: &Path) -> Result<PersistedConfig, PersistError> {
    let bytes = std::fs::read(path).map_err(|source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PersistedConfig::from_bytes(&bytes, path)
}

/// Writes to a temporary file in the same directory, syncs it, then renames
/// it over `path`.
pub fn save_config(path: &Path, config: &PersistedConfig) -> Result<(), PersistError> {
    let io = |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(&config.to_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Persists controller configuration changes together with the UI language.
/// Writes are serialized by their own lock, independent of the movement lock.
pub struct ConfigStore {
    path: PathBuf,
    language: Mutex<Language>,
    write_lock: Mutex<()>,
}

impl ConfigStore {
    pub fn new(path: impl Into<PathBuf>, language: Language) -> Self {
        ConfigStore {
            path: path.into(),
            language: Mutex::new(language),
            write_lock: Mutex::new(()),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn language(&self) -> Language {
        *self.language.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn set_language(&self, language: Language) {
        *self.language.lock().unwrap_or_else(|e| e.into_inner()) = language;
    }

    pub fn snapshot(&self, robot: RobotConfig) -> PersistedConfig {
        PersistedConfig::new(robot, self.language())
    }
}

impl ConfigSink for ConfigStore {
    fn persist(&self, config: &RobotConfig) -> Result<(), String> {
        let _write = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        save_config(&self.path, &self.snapshot(config.clone())).map_err(|e| e.to_string())
    }
}
