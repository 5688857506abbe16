//! Run directories: one per run, holding the effective config, outputs and
//! a manifest. Every file is written to a temporary name and renamed into
//! place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    /// SHA-256 of `config.txt`, hex.
    pub config_digest: String,
    pub seed: Option<u64>,
    pub created_utc: String,
    /// Paths relative to the run directory.
    pub outputs: Vec<String>,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Usage(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// A run directory being filled.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    command: String,
    config: Vec<u8>,
    seed: Option<u64>,
    outputs: Vec<String>,
}

impl RunDir {
    /// Creates `<base>/<command>-<digest prefix>[-s<seed>]` and stores the
    /// config text in it.
    pub fn create(base: &Path, command: &str, config: &str, seed: Option<u64>) -> Result<Self> {
        let digest = digest_hex(config.as_bytes());
        let mut id = format!("{command}-{}", &digest[..12]);
        if let Some(s) = seed {
            id.push_str(&format!("-s{s}"));
        }
        let root = base.join(&id);
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        write_atomic(&root.join(CONFIG_FILE), config.as_bytes())?;
        Ok(Self {
            root,
            command: command.to_string(),
            config: config.as_bytes().to_vec(),
            seed,
            outputs: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn run_id(&self) -> String {
        self.root
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, bytes)?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(path)
    }

    /// Writes the manifest, stamped with `now`.
    pub fn finish(self, now: DateTime<Utc>) -> Result<RunManifest> {
        let manifest = RunManifest {
            run_id: self.run_id(),
            command: self.command.clone(),
            config_digest: digest_hex(&self.config),
            seed: self.seed,
            created_utc: now.to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: self.outputs.clone(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        write_atomic(&self.root.join(MANIFEST_FILE), &json)?;
        Ok(manifest)
    }
}

/// Checks that the stored config still matches the manifest digest.
pub fn verify(run_dir: &Path) -> Result<bool> {
    let m: RunManifest = serde_json::from_slice(
        &fs::read(run_dir.join(MANIFEST_FILE)).map_err(|e| Error::io(run_dir.join(MANIFEST_FILE), e))?,
    )?;
    let config = fs::read(run_dir.join(CONFIG_FILE)).map_err(|e| Error::io(run_dir.join(CONFIG_FILE), e))?;
    Ok(digest_hex(&config) == m.config_digest)
}
