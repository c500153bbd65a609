//! Stage directories, content hashes and up-to-date stamps.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const STAMP: &str = ".stamp.json";
pub const RUNTIME: &str = "runtime.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn json_hash<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("config serializes"))
}

/// Hash of every file under `path` (or of the file itself), keyed by relative
/// path. Stamps and runtimes are excluded.
pub fn content_hash(path: &Path) -> Result<String, CliError> {
    let mut files = Vec::new();
    collect(path, path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for rel in files {
        let full = if rel.as_os_str().is_empty() {
            path.to_path_buf()
        } else {
            path.join(&rel)
        };
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(fs::read(&full)?);
        h.update([0]);
    }
    Ok(hex::encode(h.finalize()))
}

fn collect(root: &Path, path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if path.is_file() {
        let rel = path.strip_prefix(root).unwrap_or(path).to_path_buf();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name != STAMP && name != RUNTIME {
            out.push(rel);
        }
        return Ok(());
    }
    for entry in fs::read_dir(path)? {
        collect(root, &entry?.path(), out)?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Stamp {
    stage: String,
    key: String,
    outputs: Vec<String>,
}

/// One stage run: its output directory, config hash and input hashes.
pub struct StageRun {
    pub name: &'static str,
    pub dir: PathBuf,
    pub config_hash: String,
    key: String,
    started: Instant,
}

impl StageRun {
    /// `inputs` are `(path, producing command)`; a missing one is a user error.
    pub fn new<C: Serialize>(
        name: &'static str,
        dir: PathBuf,
        config: &C,
        inputs: &[(&Path, &str)],
    ) -> Result<Self, CliError> {
        let config_hash = json_hash(config);
        let mut h = Sha256::new();
        h.update(name.as_bytes());
        h.update(config_hash.as_bytes());
        for (path, producer) in inputs {
            if !path.exists() {
                return Err(CliError::missing(path, producer));
            }
            h.update(content_hash(path)?.as_bytes());
        }
        Ok(Self {
            name,
            dir,
            config_hash,
            key: hex::encode(h.finalize()),
            started: Instant::now(),
        })
    }

    /// True when an earlier run with the same key left all its outputs.
    pub fn up_to_date(&self) -> bool {
        let Ok(text) = fs::read_to_string(self.dir.join(STAMP)) else {
            return false;
        };
        let Ok(stamp) = serde_json::from_str::<Stamp>(&text) else {
            return false;
        };
        stamp.stage == self.name
            && stamp.key == self.key
            && stamp.outputs.iter().all(|o| self.dir.join(o).exists())
    }

    pub fn prepare(&self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)?;
        let _ = fs::remove_file(self.dir.join(STAMP));
        Ok(())
    }

    /// Header lines every report starts with.
    pub fn report_header(&self) -> String {
        format!(
            "# svmstl {}\n# config {}\n# inputs {}\n",
            self.name, self.config_hash, self.key
        )
    }

    pub fn write(&self, rel: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        Ok(())
    }

    /// Records the runtime and the stamp listing `outputs`.
    pub fn finish(self, outputs: &[&str]) -> Result<(), CliError> {
        let secs = self.started.elapsed().as_secs_f64();
        self.write(RUNTIME, format!("{} {secs:.3} s\n", self.name))?;
        let stamp = Stamp {
            stage: self.name.to_string(),
            key: self.key.clone(),
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
        };
        self.write(
            STAMP,
            serde_json::to_string_pretty(&stamp).expect("stamp serializes") + "\n",
        )?;
        log::info!("{}: done in {secs:.1} s", self.name);
        Ok(())
    }
}
