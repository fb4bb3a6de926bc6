//! Output directory with a running SHA-256 digest of everything written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const DIGEST_FILE: &str = "SHA256SUMS";

pub struct Out {
    dir: PathBuf,
    written: BTreeMap<String, String>,
}

impl Out {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.written
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Adds a file written by someone else to the digest.
    pub fn record(&mut self, name: &str) -> std::io::Result<()> {
        let bytes = fs::read(self.path(name))?;
        self.written
            .insert(name.to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// `sha256sum`-compatible listing of every file written so far.
    pub fn finish(self) -> std::io::Result<()> {
        let text: String = self
            .written
            .iter()
            .map(|(name, hash)| format!("{hash}  {name}\n"))
            .collect();
        fs::write(self.path(DIGEST_FILE), text)
    }
}
