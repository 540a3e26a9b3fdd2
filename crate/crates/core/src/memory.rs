//! Strategy memory: successful persuasion records keyed by the embedding of
//! the profile they worked on, retrieved by exact squared-L2 nearest
//! neighbors.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::dialogue::Strategy;
use crate::index::{Embedder, IndexError, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// Only the strategy label is kept.
    Strategy,
    /// The persuasive utterance is kept next to the label.
    Utterance,
}

#[derive(Debug, thiserror::Error)]
pub enum MemoryError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("memory is read-only during this run")]
    Frozen,
    #[error(transparent)]
    Embed(#[from] IndexError),
    #[error("memory file: {0}")]
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEntry {
    pub key: Vector,
    pub profile_text: String,
    pub strategy: Strategy,
    pub utterance: Option<String>,
    pub source_episode_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    profile_text: String,
    strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    utterance: Option<String>,
    episode_id: String,
}

/// Append-only store. Readers take a cheap clone of the current snapshot;
/// an insert builds the next snapshot and swaps it in.
pub struct MemoryStore {
    embedder: Arc<dyn Embedder>,
    mode: ValueMode,
    frozen: bool,
    entries: RwLock<Arc<Vec<Arc<MemoryEntry>>>>,
}

impl std::fmt::Debug for MemoryStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MemoryStore")
            .field("mode", &self.mode)
            .field("frozen", &self.frozen)
            .field("len", &self.len())
            .finish()
    }
}

impl MemoryStore {
    /// An empty store that grows during the run.
    pub fn online(embedder: Arc<dyn Embedder>, mode: ValueMode) -> Self {
        Self {
            embedder,
            mode,
            frozen: false,
            entries: RwLock::new(Arc::new(Vec::new())),
        }
    }

    /// A store loaded from `path` that rejects inserts.
    pub fn offline(
        embedder: Arc<dyn Embedder>,
        mode: ValueMode,
        path: &Path,
    ) -> Result<Self, MemoryError> {
        let mut store = Self::online(embedder, mode);
        store.preload(path)?;
        store.frozen = true;
        Ok(store)
    }

    pub fn mode(&self) -> ValueMode {
        self.mode
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn snapshot(&self) -> Arc<Vec<Arc<MemoryEntry>>> {
        Arc::clone(&self.entries.read().unwrap())
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, entry: MemoryEntry) -> usize {
        let mut guard = self.entries.write().unwrap();
        let mut next: Vec<Arc<MemoryEntry>> = guard.as_ref().clone();
        next.push(Arc::new(entry));
        let id = next.len() - 1;
        *guard = Arc::new(next);
        id
    }

    fn make_entry(
        &self,
        profile_text: &str,
        strategy: Strategy,
        utterance: Option<&str>,
        episode_id: &str,
    ) -> Result<MemoryEntry, MemoryError> {
        Ok(MemoryEntry {
            key: self.embedder.embed(profile_text)?,
            profile_text: profile_text.to_string(),
            strategy,
            utterance: match self.mode {
                ValueMode::Strategy => None,
                ValueMode::Utterance => utterance.map(str::to_string),
            },
            source_episode_id: episode_id.to_string(),
        })
    }

    /// Records a persuasion that won an over-budget sale. Returns the entry
    /// id. In strategy mode any utterance is dropped.
    pub fn insert(
        &self,
        profile_text: &str,
        strategy: Strategy,
        utterance: Option<&str>,
        episode_id: &str,
    ) -> Result<usize, MemoryError> {
        if self.frozen {
            return Err(MemoryError::Frozen);
        }
        let entry = self.make_entry(profile_text, strategy, utterance, episode_id)?;
        Ok(self.push(entry))
    }

    /// The `k` entries nearest to `profile_text`, nearest first, ties by
    /// insertion order.
    pub fn retrieve(&self, profile_text: &str, k: usize) -> Result<Vec<Arc<MemoryEntry>>, MemoryError> {
        if k == 0 {
            return Err(MemoryError::ZeroK);
        }
        let snap = self.snapshot();
        if snap.is_empty() {
            return Ok(Vec::new());
        }
        let q = self.embedder.embed(profile_text)?;
        let mut scored: Vec<(f64, usize)> = snap
            .iter()
            .enumerate()
            .map(|(i, e)| (q.squared_distance(&e.key), i))
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(scored.into_iter().take(k).map(|(_, i)| Arc::clone(&snap[i])).collect())
    }

    /// Loads records from a line-delimited file; keys are re-embedded.
    pub fn preload(&mut self, path: &Path) -> Result<usize, MemoryError> {
        let text = fs::read_to_string(path)
            .map_err(|e| MemoryError::File(format!("{}: {e}", path.display())))?;
        let mut n = 0;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: Record = serde_json::from_str(line)
                .map_err(|e| MemoryError::File(format!("{} line {}: {e}", path.display(), i + 1)))?;
            if self.mode == ValueMode::Utterance && rec.utterance.is_none() {
                return Err(MemoryError::File(format!(
                    "{} line {}: utterance memory needs an utterance",
                    path.display(),
                    i + 1
                )));
            }
            let entry =
                self.make_entry(&rec.profile_text, rec.strategy, rec.utterance.as_deref(), &rec.episode_id)?;
            self.push(entry);
            n += 1;
        }
        Ok(n)
    }

    pub fn save(&self, path: &Path) -> Result<(), MemoryError> {
        let io = |e: std::io::Error| MemoryError::File(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
        for e in self.snapshot().iter() {
            let rec = Record {
                profile_text: e.profile_text.clone(),
                strategy: e.strategy,
                utterance: e.utterance.clone(),
                episode_id: e.source_episode_id.clone(),
            };
            writeln!(w, "{}", serde_json::to_string(&rec).unwrap()).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
