//! Per-note de-tuning: shift each note's audio span by an independent
//! uniform draw and splice the results back with short crossfades.

use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::{DetunedVariant, SongExample};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, uniform_in};
use crate::spectral::{pitch_shift_cents, STFT_SIZE};

/// Linear crossfade at spliced note boundaries.
pub const CROSSFADE_SECONDS: f64 = 0.010;

/// Number of de-tuned renderings produced per song.
pub const VARIANTS_PER_SONG: usize = 7;

/// Shift selected sample spans of a buffer by per-span cent amounts,
/// leaving everything outside the spans untouched.
///
/// Each span is shifted with surrounding context so the phase vocoder has
/// material to work with, then blended in over [`CROSSFADE_SECONDS`].
/// Zero-cent spans pass through bit-exactly.
pub fn shift_note_spans(
    buffer: &AudioBuffer,
    spans: &[(usize, usize)],
    cents: &[f64],
) -> Result<AudioBuffer> {
    assert_eq!(spans.len(), cents.len());
    let rate = buffer.sample_rate;
    let fade = (CROSSFADE_SECONDS * rate as f64).round() as usize;
    let mut out = buffer.samples.clone();

    for (&(start, end), &c) in spans.iter().zip(cents) {
        if c == 0.0 {
            continue;
        }
        if end > buffer.len() || start >= end {
            return Err(Error::InvalidArgument(alloc::format!(
                "span {start}..{end} outside buffer of {}",
                buffer.len()
            )));
        }
        // Context on both sides gives the vocoder stable frames at the
        // span edges.
        let ctx_lo = start.saturating_sub(STFT_SIZE);
        let ctx_hi = (end + STFT_SIZE).min(buffer.len());
        let piece = AudioBuffer::new(buffer.samples[ctx_lo..ctx_hi].to_vec(), rate);
        let shifted = pitch_shift_cents(&piece, c)?;
        let shifted_span = &shifted.samples[start - ctx_lo..end - ctx_lo];

        let n = end - start;
        let f = fade.min(n / 2);
        for i in 0..n {
            let mut alpha = 1.0;
            if i < f {
                alpha = i as f64 / f as f64;
            }
            if n - i <= f {
                alpha = alpha.min((n - i) as f64 / f as f64);
            }
            out[start + i] = (1.0 - alpha) * out[start + i] + alpha * shifted_span[i];
        }
    }
    Ok(AudioBuffer::new(out, rate))
}

/// Sample span of a segment on the analysis grid.
fn segment_span(seg: &crate::align::NoteSegment, hop: usize, len: usize) -> (usize, usize) {
    (seg.start_frame * hop, (seg.end_frame * hop).min(len))
}

/// Generate the de-tuned variants of one song.
///
/// Every note of every variant is shifted by an independent uniform draw in
/// [-max_cents, max_cents]; the label is the draw in semitones. Rests stay
/// untouched.
pub fn detune_song(
    example: &SongExample,
    seed: u64,
    max_cents: f64,
) -> Result<Vec<DetunedVariant>> {
    if example.segments.is_empty() {
        return Err(Error::EmptyInput("segments"));
    }
    for seg in &example.segments {
        if seg.frames() < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "segment at frame {} shorter than 2 frames",
                seg.start_frame
            )));
        }
    }
    let hop = crate::spectral::STFT_HOP;
    let len = example.vocal.len();
    let spans: Vec<(usize, usize)> = example
        .segments
        .iter()
        .map(|s| segment_span(s, hop, len))
        .collect();

    let mut variants = Vec::with_capacity(VARIANTS_PER_SONG);
    for v in 0..VARIANTS_PER_SONG {
        let mut rng = rng_from_seed(derive_seed(seed, v as u64));
        let cents: Vec<f64> = (0..spans.len())
            .map(|_| uniform_in(&mut rng, -max_cents, max_cents))
            .collect();
        let detuned_vocal = shift_note_spans(&example.vocal, &spans, &cents)?;
        variants.push(DetunedVariant {
            detuned_vocal,
            labels: cents.iter().map(|c| c / 100.0).collect(),
            variant_index: v,
        });
    }
    Ok(variants)
}
