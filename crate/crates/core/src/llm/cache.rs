use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{request_hash, FinishReason, ModelParams, RawCompletion};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedRequest {
    pub prompt: String,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub text: String,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request: CachedRequest,
    pub response: CachedResponse,
}

impl CacheEntry {
    pub fn new(prompt: &str, params: &ModelParams, raw: &RawCompletion) -> Self {
        CacheEntry {
            request: CachedRequest { prompt: prompt.to_string(), params: params.clone() },
            response: CachedResponse { text: raw.text.clone(), finish_reason: raw.finish_reason.clone() },
        }
    }
}

/// One JSON file per request hash. Entries are written once through a
/// temporary file and a rename; an entry that fails to parse or does not
/// hash back to its name is moved to `quarantine/` and reported as a miss.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    counter: AtomicU64,
}

impl Cache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Cache { dir: dir.to_path_buf(), counter: AtomicU64::new(0) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, hash: &str) -> PathBuf {
        self.dir.join(format!("{hash}.json"))
    }

    pub fn lookup(&self, hash: &str) -> Option<CacheEntry> {
        let path = self.entry_path(hash);
        let bytes = fs::read(&path).ok()?;
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if request_hash(&entry.request.prompt, &entry.request.params) == hash => Some(entry),
            _ => {
                self.quarantine(&path, hash);
                None
            }
        }
    }

    fn quarantine(&self, path: &Path, hash: &str) {
        let qdir = self.dir.join("quarantine");
        let moved = fs::create_dir_all(&qdir).and_then(|_| fs::rename(path, qdir.join(format!("{hash}.json"))));
        match moved {
            Ok(()) => log::warn!("corrupt cache entry {hash} moved to quarantine"),
            Err(e) => log::warn!("corrupt cache entry {hash} could not be quarantined: {e}"),
        }
    }

    /// Stores `entry` unless a file for `hash` already exists.
    pub fn store(&self, hash: &str, entry: &CacheEntry) -> Result<()> {
        let path = self.entry_path(hash);
        if path.exists() {
            return Ok(());
        }
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{hash}.{}.{n}.tmp", std::process::id()));
        let body = serde_json::to_vec_pretty(entry)?;
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::io(&path, e)
        })
    }
}
