//! Bit-exact feature cache encoding.
//!
//! Layout: magic "ATF1", version u16, channel/bin/frame counts, hop,
//! the f64 payload, then the segment table and the label table.

use alloc::vec::Vec;

use super::{FeatureRecord, FeatureTensor};
use crate::align::NoteSegment;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"ATF1";
const VERSION: u16 = 1;

pub fn encode_feature_record(record: &FeatureRecord) -> Vec<u8> {
    let f = &record.features;
    let mut w = ByteWriter::new();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u32(f.channels as u32);
    w.u32(f.bins as u32);
    w.u32(f.frames as u32);
    w.f64(record.hop_seconds);
    w.u32(record.segments.len() as u32);
    for v in &f.values {
        w.f64(*v);
    }
    for seg in &record.segments {
        w.u32(seg.start_frame as u32);
        w.u32(seg.end_frame as u32);
        w.f64(seg.score_midi);
    }
    for seg in &record.segments {
        w.f64(seg.shift_label);
    }
    w.into_bytes()
}

pub fn decode_feature_record(bytes: &[u8]) -> Result<FeatureRecord> {
    let mut r = ByteReader::new(bytes, "feature cache");
    r.expect_header(MAGIC, VERSION)?;
    let channels = r.u32()? as usize;
    let bins = r.u32()? as usize;
    let frames = r.u32()? as usize;
    let hop_seconds = r.f64()?;
    let n_segments = r.u32()? as usize;

    let n_values = channels * bins * frames;
    let mut values = Vec::with_capacity(n_values);
    for _ in 0..n_values {
        values.push(r.f64()?);
    }
    let mut segments = Vec::with_capacity(n_segments);
    for _ in 0..n_segments {
        let start_frame = r.u32()? as usize;
        let end_frame = r.u32()? as usize;
        let score_midi = r.f64()?;
        if start_frame >= end_frame || end_frame > frames {
            return Err(Error::CorruptData(alloc::format!(
                "segment {start_frame}..{end_frame} outside {frames} frames"
            )));
        }
        segments.push(NoteSegment {
            start_frame,
            end_frame,
            score_midi,
            shift_label: 0.0,
        });
    }
    for seg in segments.iter_mut() {
        seg.shift_label = r.f64()?;
    }
    if r.remaining() != 0 {
        return Err(Error::CorruptData(alloc::format!(
            "feature cache: {} trailing bytes",
            r.remaining()
        )));
    }
    Ok(FeatureRecord {
        features: FeatureTensor {
            channels,
            bins,
            frames,
            values,
        },
        segments,
        hop_seconds,
    })
}
