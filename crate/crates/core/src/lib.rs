//! Note-level automatic pitch correction for karaoke-style recordings.
//!
//! The crate covers the full pipeline: constant-Q analysis of vocal and
//! accompaniment tracks, monophonic pitch tracking, score-to-performance
//! alignment, synthetic corpus generation with per-note de-tuning, and a
//! convolutional-GRU regressor that learns the de-tuning amount of each
//! note so it can be shifted back.
//!
//! Everything here is pure computation over in-memory buffers; file IO and
//! the command-line surface live in the companion `retune-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod align;
pub mod audio;
pub mod codec;
pub mod dataset;
pub mod error;
mod fft;
pub mod model;
pub mod nn;
pub mod pitch;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
