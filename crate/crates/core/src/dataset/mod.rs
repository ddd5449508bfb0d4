//! Training-data machinery: synthetic karaoke songs, per-note de-tuning,
//! 3-channel feature tensors, and their cache encoding.

mod cache;
mod detune;
mod synth;

pub use cache::{decode_feature_record, encode_feature_record};
pub use detune::{detune_song, shift_note_spans, CROSSFADE_SECONDS, VARIANTS_PER_SONG};
pub use synth::{random_score, synth_song, SynthConfig};

use alloc::format;
use alloc::vec::Vec;

use crate::align::{NoteSegment, Score};
use crate::audio::{normalize_std, AudioBuffer};
use crate::error::{Error, Result};
use crate::spectral::{CqtKernel, CqtMatrix};

/// One synthetic song: separate vocal and accompaniment stems, the score,
/// and the note boundaries on the analysis grid.
#[derive(Debug, Clone)]
pub struct SongExample {
    pub vocal: AudioBuffer,
    pub accompaniment: AudioBuffer,
    pub score: Score,
    pub segments: Vec<NoteSegment>,
}

/// One de-tuned rendering of a song's vocal track.
#[derive(Debug, Clone)]
pub struct DetunedVariant {
    pub detuned_vocal: AudioBuffer,
    /// Per-segment shift in semitones, each in [-1, 1].
    pub labels: Vec<f64>,
    pub variant_index: usize,
}

/// Network input: channels x bins x frames, row-major.
///
/// Channel 0 is the accompaniment CQT, channel 1 the (de-tuned) vocal CQT,
/// channel 2 the binary disagreement of their median-binarized forms.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    pub channels: usize,
    pub bins: usize,
    pub frames: usize,
    pub values: Vec<f64>,
}

impl FeatureTensor {
    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = self.bins * self.frames;
        &self.values[c * plane..(c + 1) * plane]
    }

    /// Copy frames [start, end) of the first `channels` channels into a
    /// contiguous [channels x bins x (end-start)] block.
    pub fn slice_frames(&self, start: usize, end: usize, channels: usize) -> Vec<f64> {
        debug_assert!(start < end && end <= self.frames && channels <= self.channels);
        let t = end - start;
        let mut out = Vec::with_capacity(channels * self.bins * t);
        for c in 0..channels {
            let plane = self.channel(c);
            for k in 0..self.bins {
                let row = &plane[k * self.frames..(k + 1) * self.frames];
                out.extend_from_slice(&row[start..end]);
            }
        }
        out
    }
}

/// Features plus the segments that index into them; `shift_label` on each
/// segment carries the de-tuning ground truth in semitones.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub features: FeatureTensor,
    pub segments: Vec<NoteSegment>,
    pub hop_seconds: f64,
}

/// Median over all entries (mean of the two middles for even counts).
fn global_median(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Threshold a CQT at its global median: entries strictly below the median
/// become 0, everything else 1.
pub fn binarize_cqt(cqt: &CqtMatrix) -> Vec<f64> {
    let median = global_median(&cqt.magnitudes);
    cqt.magnitudes
        .iter()
        .map(|&v| if v < median { 0.0 } else { 1.0 })
        .collect()
}

/// Bitwise disagreement (XOR) of two binary matrices of equal shape.
pub fn disagreement(bin_vocal: &[f64], bin_accomp: &[f64]) -> Result<Vec<f64>> {
    if bin_vocal.len() != bin_accomp.len() {
        return Err(Error::ShapeMismatch(format!(
            "disagreement: {} vs {} entries",
            bin_vocal.len(),
            bin_accomp.len()
        )));
    }
    Ok(bin_vocal
        .iter()
        .zip(bin_accomp)
        .map(|(&a, &b)| (a - b).abs())
        .collect())
}

/// Build the 3-channel network input from a vocal and accompaniment pair.
///
/// Both stems are normalized to unit standard deviation, transformed, and
/// truncated to a common frame count (which may differ by at most one
/// frame). Near-silent stems produce an all-zero CQT channel rather than an
/// error so silent vocals stay representable.
pub fn build_features(
    vocal: &AudioBuffer,
    accompaniment: &AudioBuffer,
    kernel: &CqtKernel,
) -> Result<FeatureTensor> {
    let vocal_cqt = normalized_cqt(vocal, kernel)?;
    let accomp_cqt = normalized_cqt(accompaniment, kernel)?;
    let t_v = vocal_cqt.frames;
    let t_a = accomp_cqt.frames;
    if t_v.abs_diff(t_a) > 1 {
        return Err(Error::ShapeMismatch(format!(
            "stem lengths differ by {} frames after truncation",
            t_v.abs_diff(t_a)
        )));
    }
    let frames = t_v.min(t_a);
    let vocal_cqt = vocal_cqt.truncated(frames);
    let accomp_cqt = accomp_cqt.truncated(frames);
    let bins = vocal_cqt.bins;

    let bin_v = binarize_cqt(&vocal_cqt);
    let bin_a = binarize_cqt(&accomp_cqt);
    let diff = disagreement(&bin_v, &bin_a)?;

    let mut values = Vec::with_capacity(3 * bins * frames);
    values.extend_from_slice(&accomp_cqt.magnitudes);
    values.extend_from_slice(&vocal_cqt.magnitudes);
    values.extend_from_slice(&diff);
    Ok(FeatureTensor {
        channels: 3,
        bins,
        frames,
        values,
    })
}

fn normalized_cqt(buffer: &AudioBuffer, kernel: &CqtKernel) -> Result<CqtMatrix> {
    match normalize_std(buffer) {
        Ok(normalized) => kernel.apply(&normalized),
        Err(Error::NearSilent) => kernel.apply(buffer),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::CANONICAL_RATE;
    use crate::spectral::CqtConfig;
    use alloc::vec;

    fn matrix(values: Vec<f64>, bins: usize, frames: usize) -> CqtMatrix {
        CqtMatrix {
            magnitudes: values,
            bins,
            frames,
            hop_seconds: 256.0 / 22050.0,
            f_min: 100.0,
        }
    }

    #[test]
    fn binarize_constant_matrix_is_all_ones() {
        let m = matrix(vec![3.5; 6], 2, 3);
        assert!(binarize_cqt(&m).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn binarize_two_by_two() {
        let m = matrix(vec![0.0, 1.0, 2.0, 3.0], 2, 2);
        assert_eq!(binarize_cqt(&m), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn binarize_scale_invariant() {
        let values = vec![0.1, 0.9, 0.4, 0.7, 0.2, 0.5];
        let a = binarize_cqt(&matrix(values.clone(), 2, 3));
        let scaled: Vec<f64> = values.iter().map(|v| v * 10.0).collect();
        let b = binarize_cqt(&matrix(scaled, 2, 3));
        assert_eq!(a, b);
    }

    #[test]
    fn disagreement_props() {
        let a = vec![0.0, 1.0, 1.0, 0.0];
        let b = vec![0.0, 1.0, 0.0, 1.0];
        assert_eq!(disagreement(&a, &a).unwrap(), vec![0.0; 4]);
        let ones = disagreement(&a, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(ones, vec![1.0; 4]);
        assert_eq!(
            disagreement(&a, &b).unwrap(),
            disagreement(&b, &a).unwrap()
        );
        assert!(disagreement(&a, &[0.0]).is_err());
    }

    #[test]
    fn features_identical_stems_zero_disagreement() {
        let rate = CANONICAL_RATE;
        let n = 8000;
        let w = core::f64::consts::TAU * 440.0 / rate as f64;
        let buf = AudioBuffer::new((0..n).map(|i| 0.5 * (w * i as f64).sin()).collect(), rate);
        let kernel = CqtKernel::new(CqtConfig::default(), rate);
        let f = build_features(&buf, &buf.clone(), &kernel).unwrap();
        assert_eq!(f.channels, 3);
        assert_eq!(f.bins, 576);
        assert!(f.channel(2).iter().all(|&v| v == 0.0));
        assert_eq!(f.channel(0), f.channel(1));
    }

    #[test]
    fn features_silent_vocal() {
        let rate = CANONICAL_RATE;
        let n = 8000;
        let w = core::f64::consts::TAU * 330.0 / rate as f64;
        let accomp =
            AudioBuffer::new((0..n).map(|i| 0.5 * (w * i as f64).sin()).collect(), rate);
        let vocal = AudioBuffer::new(vec![0.0; n], rate);
        let kernel = CqtKernel::new(CqtConfig::default(), rate);
        let f = build_features(&vocal, &accomp, &kernel).unwrap();
        // Vocal channel is zero; disagreement equals the binarized
        // accompaniment XOR all-ones (zero CQT binarizes to all ones under
        // the "not strictly below the median" rule).
        assert!(f.channel(1).iter().all(|&v| v == 0.0));
        let plane = f.bins * f.frames;
        let bin_a: Vec<f64> = {
            let normalized = normalize_std(&accomp).unwrap();
            let cqt = kernel.apply(&normalized).unwrap().truncated(f.frames);
            binarize_cqt(&cqt)
        };
        for i in 0..plane {
            assert_eq!(f.channel(2)[i], (1.0 - bin_a[i]).abs());
        }
    }

    #[test]
    fn slice_frames_extracts_contiguous_note() {
        let t = FeatureTensor {
            channels: 2,
            bins: 3,
            frames: 4,
            values: (0..24).map(|v| v as f64).collect(),
        };
        let s = t.slice_frames(1, 3, 2);
        assert_eq!(s.len(), 2 * 3 * 2);
        // channel 0, bin 0 holds frames 1..3 of the original row 0..4.
        assert_eq!(&s[0..2], &[1.0, 2.0]);
        // channel 1, bin 2, original row starts at 12 + 8.
        assert_eq!(&s[10..12], &[21.0, 22.0]);
    }
}
