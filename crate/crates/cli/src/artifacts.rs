use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const META_SCHEMA_VERSION: u32 = 1;

/// Sidecar record written next to every artifact: the artifact's own
/// content hash plus the hash of the resolved config that produced it.
/// Downstream stages verify both, so stale or hand-edited files are
/// refused instead of silently mixed into an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArtifactMeta {
    pub schema_version: u32,
    pub sha256: String,
    pub config_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(stage: &'static str, path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::stage(stage, format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// `train.csv` → `train.csv.meta.json`.
pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

/// Records the artifact's content hash and producing-config hash.
pub fn write_meta(stage: &'static str, path: &Path, config_hash: &str) -> Result<()> {
    let meta = ArtifactMeta {
        schema_version: META_SCHEMA_VERSION,
        sha256: sha256_file(stage, path)?,
        config_sha256: config_hash.to_string(),
    };
    let text = serde_json::to_string_pretty(&meta).expect("meta serialization cannot fail");
    std::fs::write(meta_path(path), text).map_err(|e| {
        CliError::stage(
            stage,
            format!("cannot write {}: {e}", meta_path(path).display()),
        )
    })
}

/// Checks that `path` exists, matches its recorded content hash, and was
/// produced under the current config. Returns the content hash so callers
/// can embed it in downstream artifacts.
pub fn verify(stage: &'static str, path: &Path, config_hash: &str) -> Result<String> {
    if !path.exists() {
        return Err(CliError::stage(
            stage,
            format!(
                "missing input {}; run the producing stage first",
                path.display()
            ),
        ));
    }
    let meta_file = meta_path(path);
    let text = std::fs::read_to_string(&meta_file).map_err(|e| {
        CliError::stage(
            stage,
            format!("cannot read {}: {e}", meta_file.display()),
        )
    })?;
    let meta: ArtifactMeta = serde_json::from_str(&text)
        .map_err(|e| CliError::stage(stage, format!("{}: {e}", meta_file.display())))?;
    let actual = sha256_file(stage, path)?;
    if actual != meta.sha256 {
        return Err(CliError::stage(
            stage,
            format!(
                "content hash mismatch for {}: recorded {}, found {actual}; \
                 the file was modified after it was produced",
                path.display(),
                meta.sha256
            ),
        ));
    }
    if meta.config_sha256 != config_hash {
        return Err(CliError::stage(
            stage,
            format!(
                "{} was produced by a different config (hash {} vs current {config_hash}); \
                 regenerate it with this config",
                path.display(),
                meta.config_sha256
            ),
        ));
    }
    Ok(actual)
}
