//! Synthetic karaoke corpus: harmonic vocal stems with vibrato over
//! triad-plus-melody accompaniments, all seeded.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::SongExample;
use crate::align::{Note, NoteSegment, Score};
use crate::audio::{AudioBuffer, CANONICAL_RATE};
use crate::error::{Error, Result};
use crate::pitch::midi_to_hz;
use crate::rng::{derive_seed, rng_from_seed, uniform_in, uniform_usize, ChaCha20Rng};
use crate::spectral::CqtConfig;

/// Knobs for the song generator.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub sample_rate: u32,
    /// Harmonic partials in the vocal, amplitude 1/k.
    pub partials: usize,
    /// Peak vibrato depth drawn per note, cents.
    pub vibrato_cents: f64,
    pub vibrato_hz: f64,
    /// Gain of the straight melody doubling inside the accompaniment.
    pub doubling_gain: f64,
    /// Gain of the sustained triad stack.
    pub chord_gain: f64,
    /// Bar length for chord changes, seconds.
    pub bar_seconds: f64,
    /// Notes per generated score.
    pub notes_min: usize,
    pub notes_max: usize,
    /// Note duration range, seconds.
    pub note_seconds_min: f64,
    pub note_seconds_max: f64,
    /// Probability of a short rest after a note.
    pub rest_probability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: CANONICAL_RATE,
            partials: 6,
            vibrato_cents: 16.0,
            vibrato_hz: 5.5,
            doubling_gain: 0.12,
            chord_gain: 0.16,
            bar_seconds: 2.0,
            notes_min: 20,
            notes_max: 40,
            note_seconds_min: 0.2,
            note_seconds_max: 0.45,
            rest_probability: 0.15,
        }
    }
}

/// Random walk over a major scale, clamped to a comfortable vocal range.
pub fn random_score(seed: u64, config: &SynthConfig) -> Score {
    let mut rng = rng_from_seed(seed);
    const SCALE: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];
    let key = 55 + uniform_usize(&mut rng, 8) as i32; // G3..D4 roots
    let n_notes =
        config.notes_min + uniform_usize(&mut rng, config.notes_max - config.notes_min + 1);

    let mut notes = Vec::with_capacity(n_notes);
    let mut degree = 7i32; // start an octave above the root
    let mut t = 0.1;
    for _ in 0..n_notes {
        let step = uniform_usize(&mut rng, 5) as i32 - 2;
        degree = (degree + step).clamp(0, 13);
        let midi = key + 12 * (degree / 7) + SCALE[(degree % 7) as usize];
        let duration = uniform_in(&mut rng, config.note_seconds_min, config.note_seconds_max);
        notes.push(Note {
            midi: midi as f64,
            onset: t,
            duration,
        });
        t += duration;
        if uniform_f64_local(&mut rng) < config.rest_probability {
            t += uniform_in(&mut rng, 0.06, 0.15);
        }
    }
    Score::new(notes).expect("generated score is valid by construction")
}

fn uniform_f64_local(rng: &mut ChaCha20Rng) -> f64 {
    uniform_in(rng, 0.0, 1.0)
}

/// Additive harmonic stack with per-note vibrato and a linear
/// attack/release envelope; phase is continuous across samples.
fn render_voice(
    score: &Score,
    rate: u32,
    n_samples: usize,
    partials: usize,
    gain: f64,
    vibrato: Option<(f64, f64, &mut ChaCha20Rng)>,
) -> Vec<f64> {
    let mut out = vec![0.0; n_samples];
    let dt = 1.0 / rate as f64;
    let partial_norm: f64 = (1..=partials).map(|k| 1.0 / k as f64).sum();
    let (vib_depth_max, vib_hz, mut rng) = match vibrato {
        Some((d, hz, rng)) => (d, hz, Some(rng)),
        None => (0.0, 0.0, None),
    };

    for note in &score.notes {
        let f_center = midi_to_hz(note.midi).expect("score pitch in range");
        let start = (note.onset * rate as f64).round() as usize;
        let end = (((note.onset + note.duration) * rate as f64).round() as usize).min(n_samples);
        if start >= end {
            continue;
        }
        let n = end - start;
        let attack = ((0.015 * rate as f64) as usize).min(n / 2);
        let release = ((0.025 * rate as f64) as usize).min(n / 2);
        let (vib_depth, vib_phase) = match rng.as_deref_mut() {
            Some(r) => (
                uniform_in(r, 0.5 * vib_depth_max, vib_depth_max),
                uniform_in(r, 0.0, core::f64::consts::TAU),
            ),
            None => (0.0, 0.0),
        };

        let mut phase = 0.0f64;
        for i in 0..n {
            let t = i as f64 * dt;
            let cents = vib_depth * (core::f64::consts::TAU * vib_hz * t + vib_phase).sin();
            let f = f_center * (2.0f64).powf(cents / 1200.0);
            phase += core::f64::consts::TAU * f * dt;
            let mut sample = 0.0;
            for k in 1..=partials {
                sample += (phase * k as f64).sin() / k as f64;
            }
            let mut env = 1.0;
            if i < attack {
                env = i as f64 / attack as f64;
            }
            if n - i <= release {
                env = env.min((n - i) as f64 / release as f64);
            }
            out[start + i] += gain * env * sample / partial_norm;
        }
    }
    out
}

/// Sustained triads: one chord per bar rooted an octave below the first
/// melody note of the bar, rendered as three 3-partial stacks.
fn render_chords(
    score: &Score,
    rate: u32,
    n_samples: usize,
    bar_seconds: f64,
    gain: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; n_samples];
    if score.notes.is_empty() {
        return out;
    }
    let dt = 1.0 / rate as f64;
    let total = n_samples as f64 * dt;
    let n_bars = (total / bar_seconds).ceil() as usize;

    for bar in 0..n_bars {
        let bar_start = bar as f64 * bar_seconds;
        let bar_end = (bar_start + bar_seconds).min(total);
        // Root: first note sounding at or after the bar start.
        let root = score
            .notes
            .iter()
            .find(|n| n.onset + n.duration > bar_start)
            .map(|n| n.midi)
            .unwrap_or(score.notes[0].midi);
        let triad = [root - 12.0, root - 8.0, root - 5.0]; // root, third, fifth below

        let start = (bar_start * rate as f64).round() as usize;
        let end = ((bar_end * rate as f64).round() as usize).min(n_samples);
        if start >= end {
            continue;
        }
        let n = end - start;
        let fade = ((0.01 * rate as f64) as usize).min(n / 2);
        for &midi in &triad {
            let f = match midi_to_hz(midi) {
                Ok(f) => f,
                Err(_) => continue,
            };
            let w = core::f64::consts::TAU * f * dt;
            for i in 0..n {
                let phase = w * i as f64;
                let mut sample = 0.0;
                for k in 1..=3usize {
                    sample += (phase * k as f64).sin() / k as f64;
                }
                let mut env = 1.0;
                if i < fade {
                    env = i as f64 / fade as f64;
                }
                if n - i <= fade {
                    env = env.min((n - i) as f64 / fade as f64);
                }
                out[start + i] += gain * env * sample / 1.833;
            }
        }
    }
    out
}

/// Note boundaries straight from score timing, on the analysis frame grid.
pub fn score_truth_segments(score: &Score, hop_seconds: f64, n_frames: usize) -> Vec<NoteSegment> {
    let mut segments = Vec::with_capacity(score.notes.len());
    let mut prev_end = 0usize;
    for note in &score.notes {
        let start = ((note.onset / hop_seconds).ceil() as usize).max(prev_end);
        let end = (((note.onset + note.duration) / hop_seconds).ceil() as usize).min(n_frames);
        if start >= end {
            continue;
        }
        segments.push(NoteSegment {
            start_frame: start,
            end_frame: end,
            score_midi: note.midi,
            shift_label: 0.0,
        });
        prev_end = end;
    }
    segments
}

/// Render one song: vocal stem (vibrato harmonics) plus accompaniment stem
/// (triads and a straight melody doubling), both at the canonical rate.
pub fn synth_song(score: &Score, melody_seed: u64, config: &SynthConfig) -> Result<SongExample> {
    if score.notes.is_empty() {
        return Err(Error::EmptyInput("score"));
    }
    let rate = config.sample_rate;
    let total_seconds = score.end_seconds() + 0.25;
    let n_samples = (total_seconds * rate as f64).round() as usize;

    let mut vib_rng = rng_from_seed(derive_seed(melody_seed, 0x51B));
    let vocal = render_voice(
        score,
        rate,
        n_samples,
        config.partials,
        0.5,
        Some((config.vibrato_cents, config.vibrato_hz, &mut vib_rng)),
    );

    let mut accomp = render_chords(score, rate, n_samples, config.bar_seconds, config.chord_gain);
    let doubling = render_voice(score, rate, n_samples, 3, config.doubling_gain, None);
    for (a, d) in accomp.iter_mut().zip(&doubling) {
        *a += d;
    }

    let cqt = CqtConfig::default();
    let hop_seconds = cqt.hop_seconds(rate);
    let n_frames = cqt.frame_count(n_samples).unwrap_or(0);
    let segments = score_truth_segments(score, hop_seconds, n_frames);

    Ok(SongExample {
        vocal: AudioBuffer::new(vocal, rate),
        accompaniment: AudioBuffer::new(accomp, rate),
        score: score.clone(),
        segments,
    })
}
