//! Persistent embedding cache, keyed by (model id, content hash).
//!
//! A single append-only file of line-delimited JSON records
//! `{model, hash, dim, values}`. The whole file is loaded at open; writes
//! append one line under a lock while reads go to the in-memory map, so
//! concurrent batch resolution never blocks on lookups.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingVector};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    model: String,
    hash: String,
    dim: usize,
    values: Vec<f64>,
}

pub struct EmbeddingCache {
    path: PathBuf,
    entries: RwLock<HashMap<(String, String), Vec<f64>>>,
    writer: Mutex<BufWriter<File>>,
}

impl EmbeddingCache {
    /// Opens (or creates) the cache file at `path` and loads all entries.
    /// Later lines win when a key appears more than once.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(path)?);
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed: CacheLine = serde_json::from_str(&line)?;
                entries.insert((parsed.model, parsed.hash), parsed.values);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(EmbeddingCache {
            path: path.to_path_buf(),
            entries: RwLock::new(entries),
            writer: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks up the full-dimension vector stored for (model, hash).
    pub fn get(&self, model: &str, hash: &str) -> Option<EmbeddingVector> {
        let entries = self.entries.read().expect("cache lock");
        let values = entries.get(&(model.to_string(), hash.to_string()))?;
        Some(EmbeddingVector::raw(values.clone()).expect("cached vector is finite"))
    }

    /// Stores a vector and appends it to the cache file immediately.
    pub fn put(&self, model: &str, hash: &str, vector: &EmbeddingVector) -> Result<(), EmbedError> {
        let line = CacheLine {
            model: model.to_string(),
            hash: hash.to_string(),
            dim: vector.dim(),
            values: vector.values().to_vec(),
        };
        {
            let mut writer = self.writer.lock().expect("cache writer lock");
            serde_json::to_writer(&mut *writer, &line)?;
            writer.write_all(b"\n")?;
            writer.flush()?;
        }
        self.entries
            .write()
            .expect("cache lock")
            .insert((line.model, line.hash), line.values);
        Ok(())
    }
}
