//! Run manifests: what was run, with which seeds, and a content hash for
//! every file it wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::SystemTime;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// The full effective configuration, as TOML.
    pub config: String,
    pub seeds: Vec<u64>,
    pub started: String,
    pub finished: String,
    pub files: Vec<FileEntry>,
    /// Index of the selected instance, for training runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_instance: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn timestamp() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl RunManifest {
    pub fn new(command: &str, config: String, seeds: Vec<u64>, started: String) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            seeds,
            started,
            finished: String::new(),
            files: Vec::new(),
            best_instance: None,
            notes: Vec::new(),
        }
    }

    /// Hash `files`, all under `dir`, and record them in the given order.
    pub fn add_files(&mut self, dir: &Path, files: &[PathBuf]) -> Result<()> {
        for f in files {
            let rel = f.strip_prefix(dir).map_err(|_| {
                Error::InvalidInput(format!("{} is not under {}", f.display(), dir.display()))
            })?;
            let (sha256, bytes) = sha256_file(f)?;
            self.files.push(FileEntry {
                path: rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/"),
                sha256,
                bytes,
            });
        }
        Ok(())
    }

    /// Stamp the end time and write `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        self.finished = timestamp();
        let path = dir.join(MANIFEST_FILE);
        let json =
            serde_json::to_string_pretty(&self).map_err(|e| Error::format(&path, e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    /// Files under `dir` that are missing or whose content changed.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter_map(|f| match sha256_file(&dir.join(&f.path)) {
                Ok((h, _)) if h == f.sha256 => None,
                Ok(_) => Some(format!("hash mismatch: {}", f.path)),
                Err(_) => Some(format!("missing file: {}", f.path)),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, "abc").unwrap();
        let (h, n) = sha256_file(&p).unwrap();
        assert_eq!(
            h,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(n, 3);
    }

    #[test]
    fn round_trip_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("a");
        fs::create_dir(&sub).unwrap();
        let f = sub.join("x.csv");
        fs::write(&f, "1,2\n").unwrap();
        let mut m = RunManifest::new("simulate", "seed = 1\n".into(), vec![1], timestamp());
        m.add_files(dir.path(), &[f.clone()]).unwrap();
        assert_eq!(m.files[0].path, "a/x.csv");
        let path = m.finish(dir.path()).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert!(back.verify(dir.path()).is_empty());
        fs::write(&f, "1,3\n").unwrap();
        assert_eq!(back.verify(dir.path()), vec!["hash mismatch: a/x.csv"]);
        fs::remove_file(&f).unwrap();
        assert_eq!(back.verify(dir.path()), vec!["missing file: a/x.csv"]);
    }
}
