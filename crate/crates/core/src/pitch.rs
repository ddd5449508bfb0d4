//! Monophonic fundamental-frequency tracking and pitch-unit conversions.
//!
//! The tracker runs YIN per frame (difference function plus cumulative-mean
//! normalization), collects candidate lags below a threshold with parabolic
//! refinement, and smooths the sequence with a Viterbi pass over a 10-cent
//! pitch grid that carries a voiced/unvoiced factor per state.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Analysis frame length in samples.
pub const PITCH_FRAME: usize = 2048;
/// Hop between analysis frames (matches the CQT hop).
pub const PITCH_HOP: usize = 256;
/// Frames with a voicing probability at or above this are voiced.
pub const VOICING_THRESHOLD: f64 = 0.5;
/// Strictest absolute threshold on the normalized difference function; the
/// candidate vote runs over a grid of relaxations of it.
const CMNDF_THRESHOLD: f64 = 0.15;
/// Number of thresholds in the grid, spaced 0.05 apart from CMNDF_THRESHOLD.
const THRESHOLD_STEPS: usize = 12;
/// Candidates above this normalized-difference value are discarded.
const CANDIDATE_CUTOFF: f64 = 0.7;
/// Pitch grid resolution for the smoothing pass, in cents.
const GRID_CENTS: f64 = 10.0;
/// Widest per-frame pitch move the transition model favors, in grid steps.
const BAND: isize = 5;

/// Per-frame f0 estimates (0 = unvoiced) with voicing probabilities.
#[derive(Debug, Clone)]
pub struct PitchTrack {
    pub f0: Vec<f64>,
    pub voicing: Vec<f64>,
    pub hop_seconds: f64,
}

impl PitchTrack {
    pub fn frames(&self) -> usize {
        self.f0.len()
    }

    /// Median of the voiced f0 values, or 0 if nothing is voiced.
    pub fn median_voiced_f0(&self) -> f64 {
        let mut voiced: Vec<f64> = self.f0.iter().copied().filter(|&f| f > 0.0).collect();
        if voiced.is_empty() {
            return 0.0;
        }
        voiced.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        voiced[voiced.len() / 2]
    }

    /// Fraction of frames that are voiced.
    pub fn voiced_fraction(&self) -> f64 {
        if self.f0.is_empty() {
            return 0.0;
        }
        self.f0.iter().filter(|&&f| f > 0.0).count() as f64 / self.f0.len() as f64
    }
}

/// Equal-tempered MIDI pitch to frequency: 440 * 2^((p - 69)/12).
pub fn midi_to_hz(p: f64) -> Result<f64> {
    if !(0.0..=127.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "MIDI pitch {p} outside [0, 127]"
        )));
    }
    Ok(440.0 * (2.0f64).powf((p - 69.0) / 12.0))
}

/// Frequency to (real-valued) MIDI pitch.
pub fn hz_to_midi(f: f64) -> Result<f64> {
    if f <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "frequency {f} must be positive"
        )));
    }
    Ok(69.0 + 12.0 * (f / 440.0).log2())
}

/// Signed interval from `f0` to `f1` in cents: 1200 * log2(f1/f0).
pub fn cents_between(f1: f64, f0: f64) -> Result<f64> {
    if f0 <= 0.0 || f1 <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "cents_between requires positive frequencies, got ({f1}, {f0})"
        )));
    }
    Ok(1200.0 * (f1 / f0).log2())
}

/// One YIN pitch candidate inside a frame.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    freq: f64,
    /// Fraction of the threshold grid that voted for this lag.
    weight: f64,
}

/// YIN analysis of one frame: candidates plus a voicing probability.
fn frame_candidates(
    frame: &[f64],
    sample_rate: u32,
    tau_min: usize,
    tau_max: usize,
) -> (Vec<Candidate>, f64) {
    let window = (frame.len() - tau_max).min(frame.len() / 2);
    // Difference function.
    let mut d = vec![0.0; tau_max + 1];
    for tau in 1..=tau_max {
        let mut acc = 0.0;
        for n in 0..window {
            let diff = frame[n] - frame[n + tau];
            acc += diff * diff;
        }
        d[tau] = acc;
    }
    // Cumulative-mean normalized difference.
    let mut cmndf = vec![1.0; tau_max + 1];
    let mut running = 0.0;
    for tau in 1..=tau_max {
        running += d[tau];
        cmndf[tau] = if running > 1e-12 {
            d[tau] * tau as f64 / running
        } else {
            1.0
        };
    }
    // Local minima below the cutoff, in ascending lag order, refined by
    // parabolic interpolation.
    let mut minima: Vec<(f64, f64)> = Vec::new(); // (freq, cmndf value)
    for tau in tau_min.max(2)..tau_max {
        let v = cmndf[tau];
        if v < CANDIDATE_CUTOFF && v <= cmndf[tau - 1] && v < cmndf[tau + 1] {
            let a = cmndf[tau - 1];
            let c = cmndf[tau + 1];
            let denom = a - 2.0 * v + c;
            let shift = if denom.abs() > 1e-12 {
                (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            };
            minima.push((sample_rate as f64 / (tau as f64 + shift), v));
        }
    }

    // Each threshold votes for the first (smallest-lag) minimum below it,
    // which keeps sub-octave dips from outvoting the true period.
    let mut weights = vec![0.0; minima.len()];
    let mut fired = 0usize;
    for k in 0..THRESHOLD_STEPS {
        let threshold = CMNDF_THRESHOLD + 0.05 * k as f64;
        if let Some(i) = minima.iter().position(|&(_, v)| v < threshold) {
            weights[i] += 1.0;
            fired += 1;
        }
    }
    let voicing = fired as f64 / THRESHOLD_STEPS as f64;
    let candidates = minima
        .iter()
        .zip(&weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&(freq, _), &w)| Candidate {
            freq,
            weight: w / THRESHOLD_STEPS as f64,
        })
        .collect();
    (candidates, voicing)
}

/// Track the fundamental frequency of a mono buffer.
///
/// `fmin` and `fmax` bound the search range; `fmax` must stay at or below a
/// quarter of the sample rate so the difference-function window holds at
/// least two periods.
pub fn track_pitch(buffer: &AudioBuffer, fmin: f64, fmax: f64) -> Result<PitchTrack> {
    if !(fmin > 0.0 && fmin < fmax && fmax <= buffer.sample_rate as f64 / 4.0) {
        return Err(Error::InvalidArgument(format!(
            "bad pitch range [{fmin}, {fmax}] for rate {}",
            buffer.sample_rate
        )));
    }
    if buffer.len() < PITCH_FRAME {
        return Err(Error::BufferTooShort {
            needed: PITCH_FRAME,
            got: buffer.len(),
        });
    }
    let rate = buffer.sample_rate;
    let tau_min = (rate as f64 / fmax).floor() as usize;
    let tau_max = (rate as f64 / fmin).ceil() as usize;
    let frames = 1 + (buffer.len() - PITCH_FRAME) / PITCH_HOP;

    // Pitch grid in cents above fmin.
    let span_cents = 1200.0 * (fmax / fmin).log2();
    let n_pitch = (span_cents / GRID_CENTS).ceil() as usize + 1;
    let grid_freq = |s: usize| fmin * (2.0f64).powf(s as f64 * GRID_CENTS / 1200.0);
    let grid_index = |f: f64| -> usize {
        let c = 1200.0 * (f / fmin).log2() / GRID_CENTS;
        (c.round().max(0.0) as usize).min(n_pitch - 1)
    };

    // Per-frame observations.
    let mut all_candidates = Vec::with_capacity(frames);
    let mut raw_voicing = Vec::with_capacity(frames);
    for t in 0..frames {
        let start = t * PITCH_HOP;
        let frame = &buffer.samples[start..start + PITCH_FRAME];
        let (mut cands, v) = frame_candidates(frame, rate, tau_min, tau_max);
        cands.retain(|c| c.freq >= fmin && c.freq <= fmax);
        all_candidates.push(cands);
        raw_voicing.push(v);
    }

    // Viterbi over 2*n_pitch states: voiced pitches and their unvoiced
    // shadows (which remember the last pitch through gaps).
    let neg_inf = f64::NEG_INFINITY;
    let ln = |x: f64| (x + 1e-12).ln();

    // Transition log-weights (unnormalized; every state has the same
    // out-mass so Viterbi ordering is unaffected).
    let vv: Vec<f64> = (0..=BAND)
        .map(|d| ln((BAND + 1 - d) as f64 / 36.0))
        .collect();
    let v_to_s = ln(0.02);
    let s_to_s = [ln(0.8), ln(0.05)]; // stay, drift one step
    let s_to_v: Vec<f64> = (0..=BAND)
        .map(|d| ln(0.1 * (BAND + 1 - d) as f64 / 36.0))
        .collect();

    let n_states = 2 * n_pitch;
    let mut delta = vec![neg_inf; n_states];
    let mut backptr = vec![vec![0u32; n_states]; frames];

    let obs_for = |t: usize| -> (Vec<f64>, f64) {
        let v = raw_voicing[t];
        let mut voiced_obs = vec![0.0; n_pitch];
        for c in &all_candidates[t] {
            let idx = grid_index(c.freq) as isize;
            let q = c.weight;
            for off in -2..=2_isize {
                let s = idx + off;
                if (0..n_pitch as isize).contains(&s) {
                    voiced_obs[s as usize] += q * (3 - off.abs()) as f64 / 9.0;
                }
            }
        }
        let unvoiced_obs = (1.0 - v) / n_pitch as f64;
        for o in voiced_obs.iter_mut() {
            *o = ln(*o);
        }
        (voiced_obs, ln(unvoiced_obs))
    };

    // Init.
    {
        let (vo, uo) = obs_for(0);
        for s in 0..n_pitch {
            delta[s] = vo[s];
            delta[n_pitch + s] = uo;
        }
    }

    for t in 1..frames {
        let (vo, uo) = obs_for(t);
        let mut next = vec![neg_inf; n_states];
        for s in 0..n_pitch {
            // Into voiced state s.
            let mut best = neg_inf;
            let mut arg = 0u32;
            for d in -BAND..=BAND {
                let p = s as isize + d;
                if !(0..n_pitch as isize).contains(&p) {
                    continue;
                }
                let w = delta[p as usize] + vv[d.unsigned_abs()];
                if w > best {
                    best = w;
                    arg = p as u32;
                }
                let w = delta[n_pitch + p as usize] + s_to_v[d.unsigned_abs()];
                if w > best {
                    best = w;
                    arg = (n_pitch + p as usize) as u32;
                }
            }
            next[s] = best + vo[s];
            backptr[t][s] = arg;

            // Into shadow state s.
            let mut best_s = delta[s] + v_to_s;
            let mut arg_s = s as u32;
            for d in -1..=1_isize {
                let p = s as isize + d;
                if !(0..n_pitch as isize).contains(&p) {
                    continue;
                }
                let w = delta[n_pitch + p as usize] + s_to_s[d.unsigned_abs().min(1)];
                if w > best_s {
                    best_s = w;
                    arg_s = (n_pitch + p as usize) as u32;
                }
            }
            next[n_pitch + s] = best_s + uo;
            backptr[t][n_pitch + s] = arg_s;
        }
        delta = next;
    }

    // Backtrack.
    let mut states = vec![0usize; frames];
    states[frames - 1] = delta
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    for t in (1..frames).rev() {
        states[t - 1] = backptr[t][states[t]] as usize;
    }

    // Emit f0: snap voiced states to the nearest strong candidate.
    let mut f0 = Vec::with_capacity(frames);
    let mut voicing = Vec::with_capacity(frames);
    for t in 0..frames {
        let s = states[t];
        if s < n_pitch {
            let center = grid_freq(s);
            let mut best_f = center;
            let mut best_dist = f64::INFINITY;
            for c in &all_candidates[t] {
                let dist = (1200.0 * (c.freq / center).log2()).abs();
                if dist < 25.0 && dist < best_dist {
                    best_dist = dist;
                    best_f = c.freq;
                }
            }
            f0.push(best_f);
            voicing.push(raw_voicing[t].max(VOICING_THRESHOLD));
        } else {
            f0.push(0.0);
            voicing.push(raw_voicing[t].min(VOICING_THRESHOLD - 1e-9));
        }
    }

    Ok(PitchTrack {
        f0,
        voicing,
        hop_seconds: PITCH_HOP as f64 / rate as f64,
    })
}
