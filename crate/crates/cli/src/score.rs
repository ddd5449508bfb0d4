//! Score JSON: `{"notes": [{"midi": 69.0, "onset": 0.0, "duration": 0.5}]}`.

use std::fs;
use std::path::Path;

use retune_core::align::{Note, Score};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoreFile {
    pub notes: Vec<NoteEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NoteEntry {
    pub midi: f64,
    pub onset: f64,
    pub duration: f64,
}

impl From<&Score> for ScoreFile {
    fn from(score: &Score) -> Self {
        ScoreFile {
            notes: score
                .notes
                .iter()
                .map(|n| NoteEntry {
                    midi: n.midi,
                    onset: n.onset,
                    duration: n.duration,
                })
                .collect(),
        }
    }
}

impl ScoreFile {
    pub fn to_score(&self) -> retune_core::Result<Score> {
        Score::new(
            self.notes
                .iter()
                .map(|n| Note {
                    midi: n.midi,
                    onset: n.onset,
                    duration: n.duration,
                })
                .collect(),
        )
    }
}

pub fn read_score(path: &Path) -> Result<Score> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ScoreFile =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    file.to_score().map_err(CliError::from)
}

pub fn write_score(score: &Score, path: &Path) -> Result<()> {
    let file = ScoreFile::from(score);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| CliError::format(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("score.json");
        let score = Score::new(vec![
            Note {
                midi: 69.0,
                onset: 0.0,
                duration: 0.5,
            },
            Note {
                midi: 71.5,
                onset: 0.6,
                duration: 0.4,
            },
        ])
        .unwrap();
        write_score(&score, &path).unwrap();
        let back = read_score(&path).unwrap();
        assert_eq!(back, score);
    }

    #[test]
    fn invalid_json_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\"notes\": [{\"midi\": ]}").unwrap();
        assert!(read_score(&path).is_err());
    }

    #[test]
    fn invalid_score_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad_pitch.json");
        std::fs::write(
            &path,
            "{\"notes\": [{\"midi\": 200.0, \"onset\": 0.0, \"duration\": 1.0}]}",
        )
        .unwrap();
        assert!(read_score(&path).is_err());
    }
}
