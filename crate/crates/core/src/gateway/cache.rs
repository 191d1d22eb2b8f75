//! Append-only response cache.
//!
//! Each line of the cache file is one JSON record `{key, kind, ...}`. Later
//! records for the same key shadow earlier ones.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::backend::Decoding;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache file {path}: line {line}: {reason}")]
    Corruption {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CachedValue {
    Completion { text: String },
    Embedding { vector: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    #[serde(flatten)]
    value: CachedValue,
}

fn digest(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Key for a completion: model, template, rendered prompt and decoding.
pub fn completion_key(model_id: &str, template_id: &str, prompt: &str, decoding: &Decoding) -> String {
    let temperature = decoding.temperature.to_string();
    let max_tokens = decoding.max_tokens.to_string();
    digest(&["completion", model_id, template_id, prompt, &temperature, &max_tokens])
}

pub fn embedding_key(model_id: &str, text: &str) -> String {
    digest(&["embedding", model_id, text])
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub entries: usize,
    pub completions: usize,
    pub embeddings: usize,
}

#[derive(Debug)]
pub struct ResponseCache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, CachedValue>>,
    writer: Mutex<Option<File>>,
}

impl ResponseCache {
    pub fn in_memory() -> Self {
        ResponseCache {
            path: None,
            entries: RwLock::new(HashMap::new()),
            writer: Mutex::new(None),
        }
    }

    /// Open (creating if needed) a persistent cache file.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, CacheError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (idx, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheLine =
                    serde_json::from_str(&line).map_err(|e| CacheError::Corruption {
                        path: path.clone(),
                        line: idx + 1,
                        reason: e.to_string(),
                    })?;
                entries.insert(record.key, record.value);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(ResponseCache {
            path: Some(path),
            entries: RwLock::new(entries),
            writer: Mutex::new(Some(file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<CachedValue> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: String, value: CachedValue) -> Result<(), CacheError> {
        let mut writer = self.writer.lock().unwrap();
        if let Some(file) = writer.as_mut() {
            let mut line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                value: value.clone(),
            })
            .map_err(std::io::Error::from)?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        self.entries.write().unwrap().insert(key, value);
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        let entries = self.entries.read().unwrap();
        let completions = entries
            .values()
            .filter(|v| matches!(v, CachedValue::Completion { .. }))
            .count();
        CacheStats {
            entries: entries.len(),
            completions,
            embeddings: entries.len() - completions,
        }
    }

    /// Drop every entry and truncate the backing file.
    pub fn clear(&self) -> Result<(), CacheError> {
        let mut writer = self.writer.lock().unwrap();
        if let Some(path) = &self.path {
            File::create(path)?;
            *writer = Some(OpenOptions::new().append(true).open(path)?);
        }
        self.entries.write().unwrap().clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let cache = ResponseCache::open(&path).unwrap();
        cache
            .insert("k1".into(), CachedValue::Completion { text: "A".into() })
            .unwrap();
        cache
            .insert(
                "k2".into(),
                CachedValue::Embedding {
                    vector: vec![0.1, 1.0 / 3.0],
                },
            )
            .unwrap();
        drop(cache);

        let cache = ResponseCache::open(&path).unwrap();
        assert_eq!(cache.get("k1"), Some(CachedValue::Completion { text: "A".into() }));
        assert_eq!(
            cache.get("k2"),
            Some(CachedValue::Embedding {
                vector: vec![0.1, 1.0 / 3.0]
            })
        );
        assert_eq!(
            cache.stats(),
            CacheStats {
                entries: 2,
                completions: 1,
                embeddings: 1
            }
        );
        cache.clear().unwrap();
        assert_eq!(cache.stats().entries, 0);
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
    }

    #[test]
    fn corrupt_line_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        std::fs::write(&path, "{\"key\":\"a\",\"kind\":\"completion\",\"text\":\"x\"}\ngarbage\n").unwrap();
        match ResponseCache::open(&path) {
            Err(CacheError::Corruption { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn keys_depend_on_every_part() {
        let d = Decoding::default();
        let base = completion_key("m", "t", "p", &d);
        assert_ne!(base, completion_key("m2", "t", "p", &d));
        assert_ne!(base, completion_key("m", "t2", "p", &d));
        assert_ne!(base, completion_key("m", "t", "p2", &d));
        let hot = Decoding {
            temperature: 0.7,
            ..d
        };
        assert_ne!(base, completion_key("m", "t", "p", &hot));
        assert_ne!(embedding_key("m", "x"), embedding_key("m", "y"));
        // length-prefixing keeps ("ab","c") and ("a","bc") apart
        assert_ne!(completion_key("ab", "c", "p", &d), completion_key("a", "bc", "p", &d));
    }
}
