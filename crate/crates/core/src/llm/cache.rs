use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::provider::{ChatProvider, ChatRequest};
use super::LlmError;

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    provider: String,
    model: String,
    prompt: String,
    response: String,
}

/// Disk-backed response cache keyed by request idempotency key.
///
/// Every fresh call is appended to a JSON Lines file, which doubles as the
/// prompt/response audit log.
pub struct CachedChat<P> {
    inner: P,
    path: PathBuf,
    entries: Mutex<HashMap<String, String>>,
    log: Mutex<File>,
}

impl<P: ChatProvider> CachedChat<P> {
    pub fn open(inner: P, path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| LlmError::Provider(format!("cache {}: {e}", path.display()));
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path).map_err(io)?).lines() {
                let line = line.map_err(io)?;
                // a torn final line from a crash is skipped
                if let Ok(rec) = serde_json::from_str::<CacheRecord>(&line) {
                    entries.insert(rec.key, rec.response);
                }
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        Ok(Self {
            inner,
            path,
            entries: Mutex::new(entries),
            log: Mutex::new(log),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl<P: ChatProvider> ChatProvider for CachedChat<P> {
    fn provider_id(&self) -> &str {
        self.inner.provider_id()
    }

    fn model_name(&self) -> &str {
        self.inner.model_name()
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let key = request.idempotency_key(self.inner.provider_id(), self.inner.model_name());
        if let Some(hit) = self.entries.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let response = self.inner.complete(request)?;
        let rec = CacheRecord {
            key: key.clone(),
            provider: self.inner.provider_id().to_string(),
            model: self.inner.model_name().to_string(),
            prompt: request.prompt.clone(),
            response: response.clone(),
        };
        let line = serde_json::to_string(&rec).expect("cache record serializes");
        {
            let mut log = self.log.lock().unwrap();
            writeln!(log, "{line}").map_err(|e| LlmError::Provider(format!("cache {}: {e}", self.path.display())))?;
        }
        self.entries.lock().unwrap().insert(key, response.clone());
        Ok(response)
    }
}
