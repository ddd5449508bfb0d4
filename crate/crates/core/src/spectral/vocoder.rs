//! STFT phase vocoder: time stretching and pitch shifting in cents.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::audio::{resample_ratio, AudioBuffer};
use crate::error::{Error, Result};
use crate::fft::{hann_window, Fft};

/// STFT frame length used by the vocoder (matches the CQT frame).
pub const STFT_SIZE: usize = 2048;
/// STFT hop (matches the CQT hop).
pub const STFT_HOP: usize = 256;

/// Complex STFT, frames x bins with bins = fft_size/2 + 1.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub data: Vec<Complex64>,
    pub fft_size: usize,
    pub hop: usize,
    pub frames: usize,
}

impl ComplexSpectrogram {
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let b = self.bins();
        &self.data[t * b..(t + 1) * b]
    }
}

/// Short-time Fourier transform with a periodic Hann analysis window.
pub fn stft(samples: &[f64], fft_size: usize, hop: usize) -> Result<ComplexSpectrogram> {
    if samples.len() < fft_size {
        return Err(Error::BufferTooShort {
            needed: fft_size,
            got: samples.len(),
        });
    }
    let frames = 1 + (samples.len() - fft_size) / hop;
    let bins = fft_size / 2 + 1;
    let window = hann_window(fft_size);
    let fft = Fft::new(fft_size);

    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex64::new(0.0, 0.0); fft_size];
    for t in 0..frames {
        let start = t * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            *slot = Complex64::new(samples[start + i] * window[i], 0.0);
        }
        fft.forward(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(ComplexSpectrogram {
        data,
        fft_size,
        hop,
        frames,
    })
}

/// Inverse STFT by weighted overlap-add with the Hann synthesis window.
pub fn istft(spec: &ComplexSpectrogram) -> Vec<f64> {
    let n = spec.fft_size;
    let hop = spec.hop;
    let bins = spec.bins();
    let window = hann_window(n);
    let fft = Fft::new(n);

    let out_len = (spec.frames - 1) * hop + n;
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for t in 0..spec.frames {
        let frame = spec.frame(t);
        buf[..bins].copy_from_slice(frame);
        // Rebuild the negative-frequency half from conjugate symmetry.
        for j in bins..n {
            buf[j] = frame[n - j].conj();
        }
        fft.inverse(&mut buf);
        let start = t * hop;
        for i in 0..n {
            out[start + i] += buf[i].re * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        if *w > 1e-12 {
            *o /= *w;
        }
    }
    out
}

fn princarg(phase: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    phase - tau * (phase / tau).round()
}

/// Phase-vocoder time stretch.
///
/// Output frame `m` reads source position `m * rate`: magnitudes are
/// linearly interpolated between the two neighboring source frames and each
/// bin's phase advances by the instantaneous frequency measured there.
/// `rate` > 1 shortens, `rate` < 1 lengthens.
pub fn time_stretch(spec: &ComplexSpectrogram, rate: f64) -> Result<ComplexSpectrogram> {
    if !(0.25..=4.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "stretch rate {rate} outside [0.25, 4]"
        )));
    }
    let bins = spec.bins();
    let in_frames = spec.frames;
    let out_frames = (((in_frames - 1) as f64 / rate).floor() as usize) + 1;

    let mut data = Vec::with_capacity(out_frames * bins);
    // Expected per-hop phase advance for each bin.
    let omega: Vec<f64> = (0..bins)
        .map(|k| core::f64::consts::TAU * k as f64 * spec.hop as f64 / spec.fft_size as f64)
        .collect();

    let mut phase: Vec<f64> = spec.frame(0).iter().map(|c| c.arg()).collect();
    // First output frame is the first input frame verbatim.
    data.extend_from_slice(spec.frame(0));

    for m in 1..out_frames {
        let s = m as f64 * rate;
        let s0 = (s.floor() as usize).min(in_frames - 1);
        let s1 = (s0 + 1).min(in_frames - 1);
        let frac = s - s0 as f64;
        let prev = spec.frame(s0);
        let next = spec.frame(s1);
        // Instantaneous frequency measured across the source hop just
        // crossed, so rate = 1 reproduces the input phases exactly.
        let p0 = (((m - 1) as f64 * rate).floor() as usize).min(in_frames.saturating_sub(2));
        let (fa, fb) = (spec.frame(p0), spec.frame(p0 + 1));
        for k in 0..bins {
            let mag = (1.0 - frac) * prev[k].norm() + frac * next[k].norm();
            let dphi = princarg(fb[k].arg() - fa[k].arg() - omega[k]) + omega[k];
            phase[k] += dphi;
            data.push(Complex64::from_polar(mag, phase[k]));
        }
    }
    Ok(ComplexSpectrogram {
        data,
        fft_size: spec.fft_size,
        hop: spec.hop,
        frames: out_frames,
    })
}

/// Shift pitch by `cents` while keeping duration, via time stretch plus
/// resampling. Output length equals input length exactly (the tail is
/// trimmed or zero-padded within one hop).
pub fn pitch_shift_cents(buffer: &AudioBuffer, cents: f64) -> Result<AudioBuffer> {
    if cents.abs() > 1200.0 {
        return Err(Error::InvalidArgument(format!(
            "pitch shift {cents} cents outside [-1200, 1200]"
        )));
    }
    if cents == 0.0 {
        return Ok(buffer.clone());
    }
    let r = (2.0f64).powf(cents / 1200.0);
    let n = buffer.len();

    // Zero-pad very short inputs up to one analysis frame.
    let mut padded;
    let samples = if n < STFT_SIZE + STFT_HOP {
        padded = buffer.samples.clone();
        padded.resize(STFT_SIZE + STFT_HOP, 0.0);
        &padded[..]
    } else {
        &buffer.samples[..]
    };

    // Slow down by r (duration x r), then resample so duration returns to 1x
    // while frequencies scale by r.
    let spec = stft(samples, STFT_SIZE, STFT_HOP)?;
    let stretched = time_stretch(&spec, 1.0 / r)?;
    let slow = istft(&stretched);
    let mut shifted = resample_ratio(&slow, 1.0 / r);

    shifted.resize(n, 0.0);
    Ok(AudioBuffer::new(shifted, buffer.sample_rate))
}
