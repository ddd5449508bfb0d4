//! RIFF WAV reading and writing: 16-bit PCM and 32-bit IEEE float, mono or
//! stereo (stereo is downmixed by channel mean on read). Output is always
//! 16-bit PCM mono.

use std::fs;
use std::path::Path;

use retune_core::audio::AudioBuffer;

use crate::error::{CliError, Result};

/// Metadata returned by [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteInfo {
    /// Samples outside [-1, 1] that were clamped before quantization.
    pub clipped_samples: usize,
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

fn le_u16(b: &[u8]) -> u16 {
    u16::from_le_bytes([b[0], b[1]])
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes([b[0], b[1], b[2], b[3]])
}

/// Read a WAV file into a mono buffer scaled to [-1, 1].
pub fn read_wav(path: &Path) -> Result<AudioBuffer> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: &str| CliError::format(path, message);

    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(bad("not a RIFF/WAVE file"));
    }

    let mut fmt: Option<(u16, u16, u32, u16)> = None; // format, channels, rate, bits
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = le_u32(&bytes[pos + 4..pos + 8]) as usize;
        let body_start = pos + 8;
        let body_end = body_start.saturating_add(size).min(bytes.len());
        match id {
            b"fmt " => {
                if size < 16 {
                    return Err(bad("fmt chunk too small"));
                }
                let b = &bytes[body_start..body_end];
                fmt = Some((le_u16(&b[0..2]), le_u16(&b[2..4]), le_u32(&b[4..8]), le_u16(&b[14..16])));
            }
            b"data" => data = Some(&bytes[body_start..body_end]),
            _ => {}
        }
        pos = body_start + size + (size & 1); // chunks are word-aligned
    }

    let (format, channels, sample_rate, bits) =
        fmt.ok_or_else(|| bad("missing fmt chunk"))?;
    let data = data.ok_or_else(|| bad("missing data chunk"))?;
    if channels == 0 || !(1..=2).contains(&channels) {
        return Err(bad("only mono and stereo supported"));
    }
    if sample_rate == 0 {
        return Err(bad("zero sample rate"));
    }

    let ch = channels as usize;
    let samples: Vec<f64> = match (format, bits) {
        (FORMAT_PCM, 16) => {
            let n = data.len() / 2;
            let frames = n / ch;
            if frames == 0 {
                return Err(bad("empty data payload"));
            }
            (0..frames)
                .map(|f| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let i = (f * ch + c) * 2;
                        let v = i16::from_le_bytes([data[i], data[i + 1]]);
                        acc += v as f64 / 32768.0;
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (FORMAT_IEEE_FLOAT, 32) => {
            let n = data.len() / 4;
            let frames = n / ch;
            if frames == 0 {
                return Err(bad("empty data payload"));
            }
            (0..frames)
                .map(|f| {
                    let mut acc = 0.0;
                    for c in 0..ch {
                        let i = (f * ch + c) * 4;
                        let v = f32::from_le_bytes([data[i], data[i + 1], data[i + 2], data[i + 3]]);
                        acc += v as f64;
                    }
                    acc / ch as f64
                })
                .collect()
        }
        (f, b) => {
            return Err(bad(&format!(
                "unsupported encoding: format {f}, {b} bits per sample"
            )))
        }
    };
    Ok(AudioBuffer::new(samples, sample_rate))
}

/// Write a mono buffer as 16-bit PCM. Out-of-range samples are clamped and
/// counted in the returned metadata.
pub fn write_wav(buffer: &AudioBuffer, path: &Path) -> Result<WriteInfo> {
    if buffer.is_empty() {
        return Err(CliError::Usage(format!(
            "refusing to write empty buffer to {}",
            path.display()
        )));
    }
    if !buffer.samples.iter().all(|s| s.is_finite()) {
        return Err(CliError::format(path, "buffer contains non-finite samples"));
    }

    let mut clipped = 0usize;
    let mut pcm = Vec::with_capacity(buffer.len() * 2);
    for &s in &buffer.samples {
        let clamped = if s > 1.0 {
            clipped += 1;
            1.0
        } else if s < -1.0 {
            clipped += 1;
            -1.0
        } else {
            s
        };
        let q = (clamped * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        pcm.extend_from_slice(&q.to_le_bytes());
    }

    let data_len = pcm.len() as u32;
    let mut out = Vec::with_capacity(44 + pcm.len());
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    out.extend_from_slice(&pcm);

    fs::write(path, out).map_err(|e| CliError::io(path, e))?;
    Ok(WriteInfo {
        clipped_samples: clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn sine(freq: f64, seconds: f64, rate: u32, amp: f64) -> AudioBuffer {
        let n = (seconds * rate as f64) as usize;
        let w = std::f64::consts::TAU * freq / rate as f64;
        AudioBuffer::new((0..n).map(|i| amp * (w * i as f64).sin()).collect(), rate)
    }

    #[test]
    fn round_trip_within_quantization() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tone.wav");
        let b = sine(440.0, 0.25, 22050, 0.9);
        let info = write_wav(&b, &path).unwrap();
        assert_eq!(info.clipped_samples, 0);
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate, 22050);
        assert_eq!(back.len(), b.len());
        for (a, r) in b.samples.iter().zip(&back.samples) {
            assert!((a - r).abs() <= 1.0 / 32768.0, "{a} vs {r}");
        }
    }

    #[test]
    fn silence_reads_as_zeros() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("silence.wav");
        let b = AudioBuffer::silence(1.0, 22050);
        write_wav(&b, &path).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.len(), 22050);
        assert!(back.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn pcm_half_scale_value() {
        // Sample value 16384 must read as 0.5.
        let dir = tempdir().unwrap();
        let path = dir.path().join("half.wav");
        let mut payload: Vec<u8> = Vec::new();
        payload.extend_from_slice(b"RIFF");
        payload.extend_from_slice(&(36u32 + 4).to_le_bytes());
        payload.extend_from_slice(b"WAVE");
        payload.extend_from_slice(b"fmt ");
        payload.extend_from_slice(&16u32.to_le_bytes());
        payload.extend_from_slice(&1u16.to_le_bytes());
        payload.extend_from_slice(&1u16.to_le_bytes());
        payload.extend_from_slice(&22050u32.to_le_bytes());
        payload.extend_from_slice(&44100u32.to_le_bytes());
        payload.extend_from_slice(&2u16.to_le_bytes());
        payload.extend_from_slice(&16u16.to_le_bytes());
        payload.extend_from_slice(b"data");
        payload.extend_from_slice(&4u32.to_le_bytes());
        payload.extend_from_slice(&16384i16.to_le_bytes());
        payload.extend_from_slice(&(-16384i16).to_le_bytes());
        std::fs::write(&path, payload).unwrap();
        let b = read_wav(&path).unwrap();
        assert!((b.samples[0] - 0.5).abs() < 1e-4);
        assert!((b.samples[1] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn stereo_downmixes_by_mean() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let mut payload: Vec<u8> = Vec::new();
        let l = (0.2f32).to_le_bytes();
        let r = (0.6f32).to_le_bytes();
        let mut data = Vec::new();
        for _ in 0..100 {
            data.extend_from_slice(&l);
            data.extend_from_slice(&r);
        }
        payload.extend_from_slice(b"RIFF");
        payload.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
        payload.extend_from_slice(b"WAVE");
        payload.extend_from_slice(b"fmt ");
        payload.extend_from_slice(&16u32.to_le_bytes());
        payload.extend_from_slice(&3u16.to_le_bytes()); // IEEE float
        payload.extend_from_slice(&2u16.to_le_bytes()); // stereo
        payload.extend_from_slice(&44100u32.to_le_bytes());
        payload.extend_from_slice(&(44100u32 * 8).to_le_bytes());
        payload.extend_from_slice(&8u16.to_le_bytes());
        payload.extend_from_slice(&32u16.to_le_bytes());
        payload.extend_from_slice(b"data");
        payload.extend_from_slice(&(data.len() as u32).to_le_bytes());
        payload.extend_from_slice(&data);
        std::fs::write(&path, payload).unwrap();
        let b = read_wav(&path).unwrap();
        assert_eq!(b.sample_rate, 44100);
        assert_eq!(b.len(), 100);
        for &s in &b.samples {
            assert!((s - 0.4).abs() < 1e-6);
        }
    }

    #[test]
    fn clipping_is_counted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("hot.wav");
        let b = AudioBuffer::new(vec![0.0, 1.5, -2.0, 0.5], 22050);
        let info = write_wav(&b, &path).unwrap();
        assert_eq!(info.clipped_samples, 2);
        let back = read_wav(&path).unwrap();
        assert!((back.samples[1] - 32767.0 / 32768.0).abs() < 1e-9);
        assert_eq!(back.samples[2], -1.0);
    }

    #[test]
    fn empty_buffer_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.wav");
        let b = AudioBuffer::new(vec![], 22050);
        assert!(write_wav(&b, &path).is_err());
    }

    #[test]
    fn missing_file_and_garbage_rejected() {
        let dir = tempdir().unwrap();
        assert!(read_wav(&dir.path().join("nope.wav")).is_err());
        let path = dir.path().join("garbage.wav");
        std::fs::write(&path, b"not a wav at all").unwrap();
        assert!(read_wav(&path).is_err());
    }

    #[test]
    fn unsupported_encoding_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("u8.wav");
        let mut payload: Vec<u8> = Vec::new();
        payload.extend_from_slice(b"RIFF");
        payload.extend_from_slice(&40u32.to_le_bytes());
        payload.extend_from_slice(b"WAVE");
        payload.extend_from_slice(b"fmt ");
        payload.extend_from_slice(&16u32.to_le_bytes());
        payload.extend_from_slice(&1u16.to_le_bytes());
        payload.extend_from_slice(&1u16.to_le_bytes());
        payload.extend_from_slice(&8000u32.to_le_bytes());
        payload.extend_from_slice(&8000u32.to_le_bytes());
        payload.extend_from_slice(&1u16.to_le_bytes());
        payload.extend_from_slice(&8u16.to_le_bytes()); // 8-bit: unsupported
        payload.extend_from_slice(b"data");
        payload.extend_from_slice(&4u32.to_le_bytes());
        payload.extend_from_slice(&[1, 2, 3, 4]);
        std::fs::write(&path, payload).unwrap();
        assert!(read_wav(&path).is_err());
    }
}
