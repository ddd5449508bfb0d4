//! Mono audio buffers, standard-deviation normalization, and band-limited
//! resampling.
//!
//! All processing in the crate runs at [`CANONICAL_RATE`]; callers resample
//! on ingest. Samples are `f64` throughout so the gradient checks downstream
//! stay tight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Internal sample rate every DSP stage assumes, in Hz.
///
/// At 22050 Hz the 92 ms / 11 ms analysis grid lands on 2048 / 256 samples.
pub const CANONICAL_RATE: u32 = 22050;

/// Threshold below which a signal counts as silent for normalization.
pub const SILENCE_STD: f64 = 1e-8;

/// A mono sample sequence plus its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        debug_assert!(sample_rate > 0);
        Self {
            samples,
            sample_rate,
        }
    }

    /// Silence of the given duration.
    pub fn silence(seconds: f64, sample_rate: u32) -> Self {
        let n = (seconds * sample_rate as f64).round() as usize;
        Self::new(vec![0.0; n], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Standard deviation of the samples (about their mean).
    pub fn std_dev(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let n = self.samples.len() as f64;
        let mean = self.samples.iter().sum::<f64>() / n;
        let var = self
            .samples
            .iter()
            .map(|&x| (x - mean) * (x - mean))
            .sum::<f64>()
            / n;
        var.sqrt()
    }
}

/// Scale a buffer so its sample standard deviation is 1.
///
/// Near-silent input (std <= 1e-8) is rejected rather than amplified into
/// noise.
pub fn normalize_std(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    let sd = buffer.std_dev();
    if sd <= SILENCE_STD {
        return Err(Error::NearSilent);
    }
    let inv = 1.0 / sd;
    Ok(AudioBuffer::new(
        buffer.samples.iter().map(|&x| x * inv).collect(),
        buffer.sample_rate,
    ))
}

/// Number of sinc lobes on each side of the resampling kernel.
const SINC_LOBES: usize = 32;
/// Passband edge as a fraction of the lower Nyquist frequency.
const CUTOFF_FRACTION: f64 = 0.9;

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    let a = core::f64::consts::PI * (x + 1.0);
    0.42 - 0.5 * (a).cos() + 0.08 * (2.0 * a).cos()
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = core::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Sample a signal at positions `m / ratio` using a Blackman-windowed sinc
/// interpolator, with the anti-alias cutoff set for the given ratio.
///
/// `ratio` > 1 stretches the spectrum down in time (more output samples);
/// `ratio` < 1 decimates and band-limits first. Output length is
/// `round(len * ratio)`.
pub fn resample_ratio(samples: &[f64], ratio: f64) -> Vec<f64> {
    debug_assert!(ratio > 0.0);
    if samples.is_empty() {
        return Vec::new();
    }
    let n_out = ((samples.len() as f64 * ratio).round() as usize).max(1);
    // Cutoff relative to the source rate: full band when upsampling,
    // `ratio` of it when downsampling.
    let fc = 0.5 * CUTOFF_FRACTION * ratio.min(1.0);
    // Window always spans SINC_LOBES zero crossings of the sinc.
    let half_width = (SINC_LOBES as f64 / (2.0 * fc)).ceil() as isize;
    let inv_half = 1.0 / half_width as f64;
    let gain = 2.0 * fc;

    let n_in = samples.len() as isize;
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let center = m as f64 / ratio;
        let lo = (center.floor() as isize - half_width).max(0);
        let hi = (center.floor() as isize + half_width + 1).min(n_in - 1);
        let mut acc = 0.0;
        for n in lo..=hi {
            let d = n as f64 - center;
            let w = blackman(d * inv_half);
            acc += samples[n as usize] * w * sinc(gain * d);
        }
        out.push(acc * gain);
    }
    out
}

/// Band-limited sample-rate conversion.
///
/// Identity when the target rate matches the source. Duration is preserved
/// within one sample period and tones below 0.4x the lower of the two rates
/// survive with their frequency intact.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument(format!(
            "target sample rate must be positive, got {target_rate}"
        )));
    }
    if target_rate == buffer.sample_rate {
        return Ok(buffer.clone());
    }
    let ratio = target_rate as f64 / buffer.sample_rate as f64;
    Ok(AudioBuffer::new(
        resample_ratio(&buffer.samples, ratio),
        target_rate,
    ))
}

/// Ingest helper: downmix is already done by the reader, this clamps the
/// rate to the canonical one.
pub fn to_canonical_rate(buffer: &AudioBuffer) -> Result<AudioBuffer> {
    resample(buffer, CANONICAL_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, seconds: f64, rate: u32, amp: f64) -> AudioBuffer {
        let n = (seconds * rate as f64) as usize;
        let w = core::f64::consts::TAU * freq / rate as f64;
        AudioBuffer::new((0..n).map(|i| amp * (w * i as f64).sin()).collect(), rate)
    }

    #[test]
    fn normalize_scales_to_unit_std() {
        let mut b = sine(100.0, 0.5, 22050, 1.0);
        for s in &mut b.samples {
            *s *= 2.0;
        }
        let out = normalize_std(&b).unwrap();
        assert!((out.std_dev() - 1.0).abs() < 1e-6);
        assert_eq!(out.len(), b.len());
        assert_eq!(out.sample_rate, b.sample_rate);
    }

    #[test]
    fn normalize_rejects_silence() {
        let b = AudioBuffer::silence(0.1, 22050);
        assert_eq!(normalize_std(&b), Err(Error::NearSilent));
    }

    #[test]
    fn normalize_sine_amplitude_is_sqrt2() {
        // A sine of amplitude A has std A/sqrt(2), so the normalized peak is
        // sqrt(2) regardless of A.
        let b = sine(440.0, 1.0, 22050, 0.3);
        let out = normalize_std(&b).unwrap();
        let peak = out.samples.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        assert!(
            (peak - core::f64::consts::SQRT_2).abs() < 1e-3,
            "peak {peak}"
        );
    }

    #[test]
    fn normalize_idempotent() {
        let b = sine(220.0, 0.3, 22050, 0.7);
        let once = normalize_std(&b).unwrap();
        let twice = normalize_std(&once).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resample_identity_at_same_rate() {
        let b = sine(440.0, 0.25, 22050, 0.5);
        let out = resample(&b, 22050).unwrap();
        assert_eq!(out.samples, b.samples);
    }

    #[test]
    fn resample_rejects_zero_rate() {
        let b = sine(440.0, 0.1, 22050, 0.5);
        assert!(resample(&b, 0).is_err());
    }

    #[test]
    fn resample_preserves_duration() {
        let b = sine(440.0, 0.5, 22050, 0.5);
        let out = resample(&b, 44100).unwrap();
        let d_in = b.duration_seconds();
        let d_out = out.duration_seconds();
        assert!((d_in - d_out).abs() <= 1.0 / 22050.0);
    }

    #[test]
    fn downsample_attenuates_above_nyquist() {
        // A 10 kHz tone cannot survive resampling to 12 kHz; the anti-alias
        // filter must knock it down by at least 40 dB.
        let b = sine(10_000.0, 0.5, 22050, 1.0);
        let rms_in = b.std_dev();
        let out = resample(&b, 12_000).unwrap();
        // Skip filter edges.
        let core_part = &out.samples[600..out.samples.len() - 600];
        let rms_out =
            (core_part.iter().map(|x| x * x).sum::<f64>() / core_part.len() as f64).sqrt();
        let db = 20.0 * (rms_out / rms_in).log10();
        assert!(db <= -40.0, "attenuation only {db:.1} dB");
    }

    #[test]
    fn downsample_keeps_band_content() {
        // 6 kHz sits below 0.4x the 16 kHz target, so it must come through
        // at full level.
        let b = sine(6_000.0, 0.5, 22050, 1.0);
        let out = resample(&b, 16_000).unwrap();
        let core_part = &out.samples[800..out.samples.len() - 800];
        let rms_out =
            (core_part.iter().map(|x| x * x).sum::<f64>() / core_part.len() as f64).sqrt();
        let rms_in = core::f64::consts::FRAC_1_SQRT_2;
        assert!((rms_out - rms_in).abs() / rms_in < 0.05, "rms {rms_out}");
    }

    #[test]
    fn up_down_round_trip_correlates() {
        let b = sine(523.25, 0.4, 22050, 0.8);
        let up = resample(&b, 44100).unwrap();
        let back = resample(&up, 22050).unwrap();
        let n = b.len().min(back.len());
        let (mut dot, mut ea, mut eb) = (0.0, 0.0, 0.0);
        for i in 0..n {
            dot += b.samples[i] * back.samples[i];
            ea += b.samples[i] * b.samples[i];
            eb += back.samples[i] * back.samples[i];
        }
        let corr = dot / (ea.sqrt() * eb.sqrt());
        assert!(corr >= 0.999, "corr {corr}");
    }
}
