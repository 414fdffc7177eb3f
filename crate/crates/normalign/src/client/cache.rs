//! Append-only query record store for caching and replay.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendConfig, DistributionSource, QueryError, TokenDistribution};

/// One stored query: enough to replay it and to audit where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    /// Pure function of (model, prompt, temperature, top_logprobs).
    pub fingerprint: String,
    pub prompt: String,
    pub distribution: TokenDistribution,
    /// Unix seconds at record time; informational only.
    pub timestamp: u64,
}

/// Persistent store of [`QueryRecord`]s, one JSON record per line, UTF-8.
///
/// Records survive process restarts; concurrent readers are cheap and writes
/// are serialized through one appender.
pub struct QueryCache {
    path: PathBuf,
    index: RwLock<HashMap<String, QueryRecord>>,
    appender: Mutex<std::fs::File>,
}

impl QueryCache {
    /// Opens (or creates) the record file and loads its index.
    pub fn open(path: &Path) -> Result<Self, QueryError> {
        let mut index = HashMap::new();
        if path.exists() {
            let file = std::fs::File::open(path)
                .map_err(|e| QueryError::Storage(format!("{}: {e}", path.display())))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| QueryError::Storage(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: QueryRecord = serde_json::from_str(&line).map_err(|e| {
                    QueryError::Storage(format!("{} line {}: {e}", path.display(), i + 1))
                })?;
                index.insert(record.fingerprint.clone(), record);
            }
        }
        let appender = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| QueryError::Storage(format!("{}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            index: RwLock::new(index),
            appender: Mutex::new(appender),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.read().expect("cache index").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends a record for this (backend, prompt, distribution) and returns
    /// it. Re-recording an existing fingerprint is a no-op returning the
    /// stored record.
    pub fn record(
        &self,
        backend: &BackendConfig,
        prompt: &str,
        distribution: &TokenDistribution,
    ) -> Result<QueryRecord, QueryError> {
        let fingerprint = backend.fingerprint(prompt);
        if let Some(existing) = self.lookup(&fingerprint) {
            return Ok(existing);
        }
        let record = QueryRecord {
            fingerprint: fingerprint.clone(),
            prompt: prompt.to_string(),
            distribution: distribution.clone(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        self.append(&record)?;
        Ok(record)
    }

    /// Inserts a pre-built record, used to assemble replay fixtures.
    pub fn insert(&self, record: QueryRecord) -> Result<(), QueryError> {
        if self.lookup(&record.fingerprint).is_some() {
            return Ok(());
        }
        self.append(&record)
    }

    fn append(&self, record: &QueryRecord) -> Result<(), QueryError> {
        let line =
            serde_json::to_string(record).map_err(|e| QueryError::Storage(e.to_string()))?;
        {
            let mut file = self.appender.lock().expect("cache appender");
            file.write_all(line.as_bytes())
                .and_then(|_| file.write_all(b"\n"))
                .map_err(|e| QueryError::Storage(e.to_string()))?;
        }
        self.index
            .write()
            .expect("cache index")
            .insert(record.fingerprint.clone(), record.clone());
        Ok(())
    }

    pub fn lookup(&self, fingerprint: &str) -> Option<QueryRecord> {
        self.index
            .read()
            .expect("cache index")
            .get(fingerprint)
            .cloned()
    }
}

/// Backend that answers only from a cache; a missing record is an error, not
/// a remote call.
pub struct ReplayBackend<'a> {
    cache: &'a QueryCache,
    config: BackendConfig,
}

impl<'a> ReplayBackend<'a> {
    pub fn new(cache: &'a QueryCache, config: BackendConfig) -> Self {
        Self { cache, config }
    }
}

impl Backend for ReplayBackend<'_> {
    fn query_first_token(&self, prompt: &str) -> Result<TokenDistribution, QueryError> {
        let fingerprint = self.config.fingerprint(prompt);
        match self.cache.lookup(&fingerprint) {
            Some(record) => Ok(record.distribution.with_source(DistributionSource::Replay)),
            None => Err(QueryError::CacheMiss(fingerprint)),
        }
    }
}
