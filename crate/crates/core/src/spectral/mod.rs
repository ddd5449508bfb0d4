//! Time-frequency analysis and modification: constant-Q front end and the
//! phase-vocoder time stretch / pitch shift pair.

mod cqt;
mod vocoder;

pub use cqt::{cqt, cqt_reference, CqtConfig, CqtKernel, CqtMatrix};
pub use vocoder::{
    istft, pitch_shift_cents, stft, time_stretch, ComplexSpectrogram, STFT_HOP, STFT_SIZE,
};
