//! On-disk corpus layout and manifests.
//!
//! A corpus directory holds `<id>_vocal.wav`, `<id>_accompaniment.wav`, and
//! `<id>_score.json` per song plus a `manifest.json` recording the seed,
//! the split of every song, and a content hash. A prepared (feature cache)
//! directory holds `<id>_v<k>.atf` files plus its own manifest.

use std::fs;
use std::path::{Path, PathBuf};

use retune_core::codec::fnv1a64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SongEntry {
    pub id: String,
    pub split: Split,
    pub vocal: String,
    pub accompaniment: String,
    pub score: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub songs: Vec<SongEntry>,
    /// FNV-1a of the song table, for determinism checks.
    pub content_hash: String,
}

impl CorpusManifest {
    pub fn new(seed: u64, songs: Vec<SongEntry>) -> Self {
        let mut blob = String::new();
        for s in &songs {
            blob.push_str(&format!(
                "{}|{:?}|{}|{}|{}\n",
                s.id, s.split, s.vocal, s.accompaniment, s.score
            ));
        }
        let content_hash = format!("{:016x}", fnv1a64(blob.as_bytes()));
        Self {
            seed,
            songs,
            content_hash,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreparedSong {
    pub id: String,
    pub split: Split,
    /// Cache file per de-tuned variant, in variant order.
    pub variants: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PreparedManifest {
    pub seed: u64,
    pub versions: usize,
    pub max_cents: f64,
    pub songs: Vec<PreparedSong>,
    /// Songs that produced no aligned segments and were skipped.
    pub skipped: Vec<String>,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn corpus_manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn prepared_manifest_path(dir: &Path) -> PathBuf {
    dir.join("features.json")
}
