//! Score-to-performance alignment.
//!
//! The score is rendered to a per-frame MIDI sequence on the analysis grid,
//! aligned against the tracked performance pitch with a weighted DTW, and
//! each score note's frame span is mapped through the warp path to obtain
//! note boundaries in performance frames.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::pitch::PitchTrack;

/// A rest in a rendered per-frame pitch sequence.
pub const REST: f64 = 0.0;
/// Cost of matching a rest frame against a pitched frame.
pub const REST_COST: f64 = 6.0;

/// One symbolic note: real-valued MIDI pitch, onset and duration in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Note {
    pub midi: f64,
    pub onset: f64,
    pub duration: f64,
}

/// A monophonic score: notes with nondecreasing onsets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Score {
    pub notes: Vec<Note>,
}

impl Score {
    pub fn new(notes: Vec<Note>) -> Result<Self> {
        let mut prev_onset = f64::NEG_INFINITY;
        for n in &notes {
            if !(0.0..=127.0).contains(&n.midi) {
                return Err(Error::InvalidArgument(alloc::format!(
                    "note pitch {} outside [0, 127]",
                    n.midi
                )));
            }
            if n.duration <= 0.0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "note duration {} must be positive",
                    n.duration
                )));
            }
            if n.onset < prev_onset {
                return Err(Error::InvalidArgument(
                    "note onsets must be nondecreasing".into(),
                ));
            }
            prev_onset = n.onset;
        }
        Ok(Self { notes })
    }

    /// End time of the last note, in seconds.
    pub fn end_seconds(&self) -> f64 {
        self.notes
            .iter()
            .map(|n| n.onset + n.duration)
            .fold(0.0, f64::max)
    }
}

/// Frame span of one aligned note in performance frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoteSegment {
    pub start_frame: usize,
    /// Exclusive.
    pub end_frame: usize,
    pub score_midi: f64,
    /// De-tuning label in semitones; 0 until the dataset stage assigns it.
    pub shift_label: f64,
}

impl NoteSegment {
    pub fn frames(&self) -> usize {
        self.end_frame - self.start_frame
    }
}

/// Monotone alignment path between two sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpPath {
    /// (score frame, performance frame) pairs from (0,0) to (N-1, M-1).
    pub pairs: Vec<(usize, usize)>,
}

/// Step weights for the asymmetric DTW.
///
/// Holding the performance index while the score advances is cheap and the
/// reverse is expensive, so time distortion lands on the score side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWeights {
    pub diagonal: f64,
    /// Step (1,0): score advances alone.
    pub score_insert: f64,
    /// Step (0,1): performance advances alone.
    pub perf_insert: f64,
}

impl Default for StepWeights {
    fn default() -> Self {
        Self {
            diagonal: 1.0,
            score_insert: 0.5,
            perf_insert: 2.0,
        }
    }
}

/// Render a score to one MIDI value per analysis frame; rests are 0.
///
/// Frame `f` takes the pitch of the note active at time `f * hop`; when
/// notes overlap the later onset wins.
pub fn render_score_track(score: &Score, hop_seconds: f64, n_frames: usize) -> Vec<f64> {
    let mut track = vec![REST; n_frames];
    for note in &score.notes {
        let first = (note.onset / hop_seconds).ceil() as usize;
        let last = ((note.onset + note.duration) / hop_seconds).ceil() as usize;
        for frame in track.iter_mut().take(last.min(n_frames)).skip(first) {
            *frame = note.midi;
        }
    }
    track
}

/// Per-frame MIDI sequence from a pitch track; unvoiced frames become rests.
pub fn pitch_track_to_midi(track: &PitchTrack) -> Vec<f64> {
    track
        .f0
        .iter()
        .map(|&f| {
            if f > 0.0 {
                69.0 + 12.0 * (f / 440.0).log2()
            } else {
                REST
            }
        })
        .collect()
}

/// Local alignment cost between two per-frame MIDI values.
///
/// Pitched pairs use the octave-folded absolute difference; a rest against
/// a pitch costs the fold's maximum; two rests agree for free.
pub fn local_cost(score: f64, perf: f64) -> f64 {
    match (score == REST, perf == REST) {
        (true, true) => 0.0,
        (true, false) | (false, true) => REST_COST,
        (false, false) => {
            let d = (score - perf).abs() % 12.0;
            d.min(12.0 - d)
        }
    }
}

/// Weighted DTW between a rendered score track and a performance track.
///
/// Returns the monotone path minimizing the sum of `weight * local_cost`
/// over its steps; the start cell contributes its cost with weight 1.
pub fn dtw_align(score_track: &[f64], perf_track: &[f64], weights: StepWeights) -> Result<WarpPath> {
    let n = score_track.len();
    let m = perf_track.len();
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput("dtw sequences"));
    }

    const DIAG: u8 = 0;
    const SCORE_INS: u8 = 1; // from (i-1, j)
    const PERF_INS: u8 = 2; // from (i, j-1)

    let mut cost = vec![f64::INFINITY; n * m];
    let mut step = vec![DIAG; n * m];
    for i in 0..n {
        for j in 0..m {
            let d = local_cost(score_track[i], perf_track[j]);
            let idx = i * m + j;
            if i == 0 && j == 0 {
                cost[idx] = d;
                continue;
            }
            let mut best = f64::INFINITY;
            let mut from = DIAG;
            if i > 0 && j > 0 {
                let c = cost[(i - 1) * m + (j - 1)] + weights.diagonal * d;
                if c < best {
                    best = c;
                    from = DIAG;
                }
            }
            if i > 0 {
                let c = cost[(i - 1) * m + j] + weights.score_insert * d;
                if c < best {
                    best = c;
                    from = SCORE_INS;
                }
            }
            if j > 0 {
                let c = cost[i * m + (j - 1)] + weights.perf_insert * d;
                if c < best {
                    best = c;
                    from = PERF_INS;
                }
            }
            cost[idx] = best;
            step[idx] = from;
        }
    }

    let mut pairs = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n - 1, m - 1);
    loop {
        pairs.push((i, j));
        if i == 0 && j == 0 {
            break;
        }
        match step[i * m + j] {
            DIAG => {
                i -= 1;
                j -= 1;
            }
            SCORE_INS => i -= 1,
            _ => j -= 1,
        }
    }
    pairs.reverse();
    Ok(WarpPath { pairs })
}

/// Total weighted cost of a path (for tests and diagnostics).
pub fn path_cost(
    path: &WarpPath,
    score_track: &[f64],
    perf_track: &[f64],
    weights: StepWeights,
) -> f64 {
    let mut total = 0.0;
    for (k, &(i, j)) in path.pairs.iter().enumerate() {
        let d = local_cost(score_track[i], perf_track[j]);
        let w = if k == 0 {
            1.0
        } else {
            let (pi, pj) = path.pairs[k - 1];
            match (i - pi, j - pj) {
                (1, 1) => weights.diagonal,
                (1, 0) => weights.score_insert,
                (0, 1) => weights.perf_insert,
                _ => f64::INFINITY,
            }
        };
        total += w * d;
    }
    total
}

/// Map each score note's frame span through the warp path to performance
/// frames. Notes whose mapped span is empty are dropped; the output is
/// disjoint and time-ordered.
pub fn note_segments(score: &Score, path: &WarpPath, hop_seconds: f64) -> Vec<NoteSegment> {
    let mut segments = Vec::with_capacity(score.notes.len());
    let mut prev_end = 0usize;
    for note in &score.notes {
        let first = (note.onset / hop_seconds).ceil() as usize;
        let last = ((note.onset + note.duration) / hop_seconds).ceil() as usize;
        if last <= first {
            continue;
        }
        let mut lo = usize::MAX;
        let mut hi = 0usize;
        for &(i, j) in &path.pairs {
            if i >= first && i < last {
                lo = lo.min(j);
                hi = hi.max(j + 1);
            }
        }
        if lo == usize::MAX {
            continue;
        }
        let start = lo.max(prev_end);
        if start >= hi {
            continue;
        }
        segments.push(NoteSegment {
            start_frame: start,
            end_frame: hi,
            score_midi: note.midi,
            shift_label: 0.0,
        });
        prev_end = hi;
    }
    segments
}
