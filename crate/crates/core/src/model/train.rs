//! Training loop with per-note variant batches and hidden-state carry-over,
//! plus whole-song prediction from raw stems.

use alloc::vec;
use alloc::vec::Vec;

use super::{Cgru, MIN_NOTE_FRAMES};
use crate::align::{
    dtw_align, note_segments, pitch_track_to_midi, render_score_track, NoteSegment, Score,
    StepWeights,
};
use crate::audio::{to_canonical_rate, AudioBuffer};
use crate::dataset::{build_features, FeatureRecord};
use crate::error::{Error, Result};
use crate::nn::{adam_step, clip_grad_norm, mse_loss, mse_loss_backward, AdamState};
use crate::pitch::track_pitch;
use crate::rng::{derive_seed, normal_f64, rng_from_seed, shuffle};
use crate::spectral::{CqtConfig, CqtKernel};

/// Hyperparameters of one training run.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub lr: f64,
    /// Global gradient-norm clip threshold.
    pub clip: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Standard deviation of the per-song initial hidden state draw.
    pub hidden_init_sd: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            clip: 100.0,
            epochs: 1,
            seed: 0,
            hidden_init_sd: 1e-4,
        }
    }
}

/// One song's cached material: the de-tuned variants, each a feature tensor
/// plus labeled segments. All variants share the same segment spans.
#[derive(Debug, Clone)]
pub struct CachedSong {
    pub variants: Vec<FeatureRecord>,
}

impl CachedSong {
    fn segments(&self) -> &[NoteSegment] {
        &self.variants[0].segments
    }
}

/// One loss-curve sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// Result of a training run: the loss curve and the optimizer state for
/// checkpointing.
pub struct TrainReport {
    pub curve: Vec<CurvePoint>,
    pub adam: AdamState,
}

/// Train in place.
///
/// Per song and epoch the first hidden state is drawn from N(0, sd); each
/// note forms one batch of its variant slices, whose mean squared error
/// drives one clipped Adam step. From the second epoch on, the variants are
/// re-dealt across the carry-over chains at every note, re-shuffling which
/// shift each chain sees while reusing the cached features. Notes shorter
/// than the stride floor are skipped. A NaN loss aborts immediately.
pub fn train(
    model: &mut Cgru,
    train_set: &[CachedSong],
    val_set: &[CachedSong],
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&CurvePoint),
) -> Result<TrainReport> {
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let hidden = model.config.gru_hidden;
    let channels = model.config.input_channels;
    let mut adam = {
        let params = model.parameters();
        AdamState::new(&params, cfg.lr)
    };
    let mut rng = rng_from_seed(derive_seed(cfg.seed, 0x7EA1));
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut sq_sum = 0.0;
        let mut count = 0usize;
        for song in train_set {
            let n_variants = song.variants.len();
            if n_variants == 0 {
                continue;
            }
            // Fresh song context, shared across the variant chains.
            let mut h0 = vec![0.0; hidden];
            for v in h0.iter_mut() {
                *v = cfg.hidden_init_sd * normal_f64(&mut rng);
            }
            let mut chains = vec![h0; n_variants];

            let n_notes = song.segments().len();
            let mut routing: Vec<usize> = (0..n_variants).collect();
            for note_idx in 0..n_notes {
                let seg = song.segments()[note_idx];
                if seg.frames() < MIN_NOTE_FRAMES
                    || seg.end_frame > song.variants[0].features.frames
                {
                    continue;
                }
                if epoch > 0 {
                    shuffle(&mut rng, &mut routing);
                }

                let mut preds = Vec::with_capacity(n_variants);
                let mut labels = Vec::with_capacity(n_variants);
                let mut tapes = Vec::with_capacity(n_variants);
                let mut next_h = Vec::with_capacity(n_variants);
                for (chain, &v) in routing.iter().enumerate() {
                    let record = &song.variants[v];
                    let slice =
                        record
                            .features
                            .slice_frames(seg.start_frame, seg.end_frame, channels);
                    let (pred, h_t, tape) =
                        model.forward_note(&slice, seg.frames(), &chains[chain])?;
                    preds.push(pred);
                    labels.push(record.segments[note_idx].shift_label);
                    tapes.push(tape);
                    next_h.push(h_t);
                }

                let loss = mse_loss(&preds, &labels)?;
                if !loss.is_finite() {
                    return Err(Error::NotFinite("training loss"));
                }
                sq_sum += loss * n_variants as f64;
                count += n_variants;

                let grad_preds = mse_loss_backward(&preds, &labels);
                model.zero_grads();
                for (tape, g) in tapes.iter().zip(&grad_preds) {
                    model.backward_note(tape, *g);
                }
                {
                    let mut params = model.parameters_mut();
                    clip_grad_norm(&mut params, cfg.clip)?;
                    adam_step(&mut params, &mut adam)?;
                }
                chains = next_h;
            }
        }

        let train_mse = if count > 0 { sq_sum / count as f64 } else { f64::NAN };
        let val_mse = if val_set.is_empty() {
            None
        } else {
            Some(evaluate_mse(model, val_set)?)
        };
        let point = CurvePoint {
            epoch,
            train_mse,
            val_mse,
        };
        progress(&point);
        curve.push(point);
    }
    Ok(TrainReport { curve, adam })
}

/// Forward-only mean squared error over a cached set (zero initial hidden
/// state, identity variant routing).
pub fn evaluate_mse(model: &Cgru, set: &[CachedSong]) -> Result<f64> {
    let hidden = model.config.gru_hidden;
    let channels = model.config.input_channels;
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for song in set {
        for record in &song.variants {
            let mut h = vec![0.0; hidden];
            for (note_idx, seg) in record.segments.iter().enumerate() {
                if seg.frames() < MIN_NOTE_FRAMES || seg.end_frame > record.features.frames {
                    continue;
                }
                let slice =
                    record
                        .features
                        .slice_frames(seg.start_frame, seg.end_frame, channels);
                let (pred, h_t, _tape) = model.forward_note(&slice, seg.frames(), &h)?;
                let err = pred - record.segments[note_idx].shift_label;
                sq_sum += err * err;
                count += 1;
                h = h_t;
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyInput("evaluation set"));
    }
    Ok(sq_sum / count as f64)
}

/// Predict per-note shifts (semitones) for raw stems and a score.
///
/// Builds the 3-channel features, aligns the score against the tracked
/// vocal pitch, and runs the model over the aligned notes with a zero
/// initial hidden state. Returns the predictions and the segments they
/// refer to.
pub fn predict_song(
    model: &Cgru,
    vocal: &AudioBuffer,
    accompaniment: &AudioBuffer,
    score: &Score,
) -> Result<(Vec<f64>, Vec<NoteSegment>)> {
    let vocal = to_canonical_rate(vocal)?;
    let accompaniment = to_canonical_rate(accompaniment)?;

    let cqt_config = CqtConfig::default();
    let kernel = CqtKernel::new(cqt_config.clone(), vocal.sample_rate);
    let features = build_features(&vocal, &accompaniment, &kernel)?;

    let track = track_pitch(&vocal, 80.0, 1000.0)?;
    let perf = pitch_track_to_midi(&track);
    let score_track = render_score_track(score, track.hop_seconds, perf.len());
    let path = dtw_align(&score_track, &perf, StepWeights::default())?;
    let mut segments = note_segments(score, &path, track.hop_seconds);
    for seg in segments.iter_mut() {
        seg.end_frame = seg.end_frame.min(features.frames);
    }
    segments.retain(|s| s.start_frame < s.end_frame);
    if segments.is_empty() {
        return Err(Error::EmptyInput("aligned segments"));
    }

    let h_init = vec![0.0; model.config.gru_hidden];
    let preds = model.forward_song(&features, &segments, &h_init)?;
    Ok((preds, segments))
}
