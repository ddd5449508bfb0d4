//! The convolutional-GRU shift regressor.
//!
//! Six convolution layers squeeze the 3x576xT note slice down to a single
//! channel; the resulting frequency-by-time map is read as a time sequence
//! of frequency vectors feeding one GRU layer, and the last GRU output goes
//! through a fully connected head that emits the note's pitch-shift
//! estimate in semitones. The final hidden state carries over to the next
//! note.

mod checkpoint;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, Checkpoint};
pub use train::{
    evaluate_mse, predict_song, train, CachedSong, CurvePoint, TrainConfig, TrainReport,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codec::{fnv1a64, ByteWriter};
use crate::error::{Error, Result};
use crate::nn::{
    conv2d, conv2d_backward, gru_backward, gru_sequence, he_init, linear, linear_backward, relu,
    relu_backward, ConvContext, ConvSpec, GruContext, GruGrads, GruWeights, Parameter, Tensor,
};

/// Minimum note length in frames so every time stride keeps at least one
/// column.
pub const MIN_NOTE_FRAMES: usize = 8;

/// Architecture description: the six conv layers plus the GRU width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CgruConfig {
    pub conv: Vec<ConvSpec>,
    pub gru_hidden: usize,
    /// Frequency bins of the input (576).
    pub input_bins: usize,
    /// Input channels: 3, or 2 when the disagreement channel is dropped.
    pub input_channels: usize,
}

fn conv_layer(
    ci: usize,
    co: usize,
    kernel: (usize, usize),
    stride: (usize, usize),
    padding: (usize, usize),
) -> ConvSpec {
    ConvSpec {
        in_channels: ci,
        out_channels: co,
        kernel,
        stride,
        padding,
    }
}

impl CgruConfig {
    /// Production profile: filter counts 128/64/64/64/8/1, GRU width 64.
    pub fn full(input_channels: usize) -> Self {
        Self {
            conv: vec![
                conv_layer(input_channels, 128, (5, 5), (1, 2), (2, 2)),
                conv_layer(128, 64, (5, 5), (1, 2), (2, 2)),
                conv_layer(64, 64, (3, 3), (2, 2), (1, 1)),
                conv_layer(64, 64, (3, 3), (1, 1), (1, 1)),
                conv_layer(64, 8, (48, 1), (1, 1), (24, 1)),
                conv_layer(8, 1, (1, 1), (1, 1), (0, 0)),
            ],
            gru_hidden: 64,
            input_bins: 576,
            input_channels,
        }
    }

    /// Test profile: filter counts divided by eight, GRU width 16. Same
    /// kernels, strides, and paddings.
    pub fn tiny(input_channels: usize) -> Self {
        Self {
            conv: vec![
                conv_layer(input_channels, 16, (5, 5), (1, 2), (2, 2)),
                conv_layer(16, 8, (5, 5), (1, 2), (2, 2)),
                conv_layer(8, 8, (3, 3), (2, 2), (1, 1)),
                conv_layer(8, 8, (3, 3), (1, 1), (1, 1)),
                conv_layer(8, 1, (48, 1), (1, 1), (24, 1)),
                conv_layer(1, 1, (1, 1), (1, 1), (0, 0)),
            ],
            gru_hidden: 16,
            input_bins: 576,
            input_channels,
        }
    }

    /// (channels, height, width) after each conv layer for a T-frame input.
    pub fn shape_trace(&self, t: usize) -> Result<Vec<(usize, usize, usize)>> {
        let mut h = self.input_bins;
        let mut w = t;
        let mut trace = Vec::with_capacity(self.conv.len());
        for spec in &self.conv {
            let (oh, ow) = spec.output_size(h, w)?;
            trace.push((spec.out_channels, oh, ow));
            h = oh;
            w = ow;
        }
        Ok(trace)
    }

    /// Dimension of each GRU input vector (frequency size after the stack).
    pub fn gru_input_dim(&self) -> usize {
        self.shape_trace(MIN_NOTE_FRAMES)
            .expect("config admits the minimum note length")
            .last()
            .unwrap()
            .1
    }

    /// Stable hash of the canonical encoding, used to match checkpoints to
    /// configurations.
    pub fn config_hash(&self) -> u64 {
        let mut w = ByteWriter::new();
        w.u32(self.input_channels as u32);
        w.u32(self.input_bins as u32);
        w.u32(self.gru_hidden as u32);
        w.u32(self.conv.len() as u32);
        for c in &self.conv {
            for v in [
                c.in_channels,
                c.out_channels,
                c.kernel.0,
                c.kernel.1,
                c.stride.0,
                c.stride.1,
                c.padding.0,
                c.padding.1,
            ] {
                w.u32(v as u32);
            }
        }
        fnv1a64(&w.into_bytes())
    }
}

/// The model: configuration plus all trainable parameters.
pub struct Cgru {
    pub config: CgruConfig,
    /// Per conv layer: (weights, bias).
    pub conv_params: Vec<(Parameter, Parameter)>,
    /// w_r, u_r, b_r, w_z, u_z, b_z, w_n, u_n, b_n.
    pub gru_params: Vec<Parameter>,
    pub fc_weight: Parameter,
    pub fc_bias: Parameter,
}

const GRU_PARAM_NAMES: [&str; 9] = [
    "gru.w_r", "gru.u_r", "gru.b_r", "gru.w_z", "gru.u_z", "gru.b_z", "gru.w_n", "gru.u_n",
    "gru.b_n",
];

impl Cgru {
    /// He-initialized weights (zero biases), each tensor from a sub-seed of
    /// the master seed.
    pub fn init(config: CgruConfig, seed: u64) -> Self {
        let mut stream = 0u64;
        let mut next_seed = || {
            stream += 1;
            crate::rng::derive_seed(seed, stream)
        };

        let conv_params = config
            .conv
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let fan_in = spec.in_channels * spec.kernel.0 * spec.kernel.1;
                let w = he_init(
                    &[
                        spec.out_channels,
                        spec.in_channels,
                        spec.kernel.0,
                        spec.kernel.1,
                    ],
                    fan_in,
                    next_seed(),
                );
                let weight = Parameter::new(&format!("conv{}.weight", i + 1), w);
                let bias = Parameter::new(
                    &format!("conv{}.bias", i + 1),
                    Tensor::zeros(&[spec.out_channels]),
                );
                (weight, bias)
            })
            .collect();

        let d = config.gru_input_dim();
        let h = config.gru_hidden;
        let mut gru_params = Vec::with_capacity(9);
        for (i, name) in GRU_PARAM_NAMES.iter().enumerate() {
            let t = match i % 3 {
                0 => he_init(&[h, d], d, next_seed()),
                1 => he_init(&[h, h], h, next_seed()),
                _ => Tensor::zeros(&[h]),
            };
            gru_params.push(Parameter::new(name, t));
        }

        let fc_weight = Parameter::new("fc.weight", he_init(&[h], h, next_seed()));
        let fc_bias = Parameter::new("fc.bias", Tensor::zeros(&[1]));

        Self {
            config,
            conv_params,
            gru_params,
            fc_weight,
            fc_bias,
        }
    }

    /// All parameters in canonical (checkpoint) order.
    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for (w, b) in &self.conv_params {
            out.push(w);
            out.push(b);
        }
        out.extend(self.gru_params.iter());
        out.push(&self.fc_weight);
        out.push(&self.fc_bias);
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out: Vec<&mut Parameter> = Vec::new();
        for (w, b) in self.conv_params.iter_mut() {
            out.push(w);
            out.push(b);
        }
        out.extend(self.gru_params.iter_mut());
        out.push(&mut self.fc_weight);
        out.push(&mut self.fc_bias);
        out
    }

    pub fn zero_grads(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    pub fn count_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.value.numel()).sum()
    }

    fn gru_weights(&self) -> GruWeights<'_> {
        GruWeights {
            w_r: &self.gru_params[0].value.values,
            u_r: &self.gru_params[1].value.values,
            b_r: &self.gru_params[2].value.values,
            w_z: &self.gru_params[3].value.values,
            u_z: &self.gru_params[4].value.values,
            b_z: &self.gru_params[5].value.values,
            w_n: &self.gru_params[6].value.values,
            u_n: &self.gru_params[7].value.values,
            b_n: &self.gru_params[8].value.values,
        }
    }

    /// Forward pass over one note slice ([channels x bins x t] row-major).
    ///
    /// Returns the shift prediction in semitones, the final hidden state
    /// for carry-over, and the tape for [`Cgru::backward_note`].
    pub fn forward_note(
        &self,
        features: &[f64],
        t: usize,
        h0: &[f64],
    ) -> Result<(f64, Vec<f64>, NoteTape)> {
        if t < MIN_NOTE_FRAMES {
            return Err(Error::BufferTooShort {
                needed: MIN_NOTE_FRAMES,
                got: t,
            });
        }
        if features.len() != self.config.input_channels * self.config.input_bins * t {
            return Err(Error::ShapeMismatch(format!(
                "note features: got {} values for {}x{}x{}",
                features.len(),
                self.config.input_channels,
                self.config.input_bins,
                t
            )));
        }
        if h0.len() != self.config.gru_hidden {
            return Err(Error::ShapeMismatch("hidden state width".into()));
        }

        let n_layers = self.config.conv.len();
        let mut conv_steps = Vec::with_capacity(n_layers);
        let mut current = features.to_vec();
        let mut h = self.config.input_bins;
        let mut w = t;
        for (i, spec) in self.config.conv.iter().enumerate() {
            let (weights, bias) = &self.conv_params[i];
            let (mut out, ctx) =
                conv2d(&current, &weights.value.values, &bias.value.values, *spec, h, w)?;
            if i + 1 < n_layers {
                relu(&mut out);
            }
            (h, w) = ctx.output_hw;
            conv_steps.push(ConvStep {
                ctx,
                output: out.clone(),
            });
            current = out;
        }

        // Conv6 gives [1 x F' x T']; transpose to T' rows of F' features.
        let (f_dim, t_dim) = (h, w);
        let mut gru_inputs = vec![0.0; t_dim * f_dim];
        for f in 0..f_dim {
            for tt in 0..t_dim {
                gru_inputs[tt * f_dim + f] = current[f * t_dim + tt];
            }
        }

        let (outputs, h_t, gru_ctx) = gru_sequence(&gru_inputs, h0, &self.gru_weights(), f_dim)?;
        let last = &outputs[(t_dim - 1) * self.config.gru_hidden..];
        let pred = linear(last, &self.fc_weight.value.values, self.fc_bias.value.values[0])?;

        Ok((
            pred,
            h_t,
            NoteTape {
                conv_steps,
                gru_ctx,
                gru_last_output: last.to_vec(),
                gru_steps: t_dim,
                conv_out_hw: (f_dim, t_dim),
            },
        ))
    }

    /// Accumulate gradients for one note given d(loss)/d(prediction).
    ///
    /// The incoming hidden state is treated as data: gradients do not flow
    /// into the previous note.
    pub fn backward_note(&mut self, tape: &NoteTape, grad_pred: f64) {
        let hd = self.config.gru_hidden;
        let (f_dim, t_dim) = tape.conv_out_hw;

        // FC head.
        let mut grad_fc_bias = 0.0;
        let grad_last = {
            let gw = &mut self.fc_weight.grad.values;
            let g = linear_backward(
                &tape.gru_last_output,
                &self.fc_weight.value.values,
                grad_pred,
                gw,
                &mut grad_fc_bias,
            );
            self.fc_bias.grad.values[0] += grad_fc_bias;
            g
        };

        // GRU: only the last step's output receives gradient.
        let mut grad_outputs = vec![0.0; tape.gru_steps * hd];
        grad_outputs[(tape.gru_steps - 1) * hd..].copy_from_slice(&grad_last);
        let (grad_gru_in, _grad_h0) = {
            // Split each parameter into a value view and a grad slot.
            let mut values: Vec<&[f64]> = Vec::with_capacity(9);
            let mut slots: Vec<&mut [f64]> = Vec::with_capacity(9);
            for p in self.gru_params.iter_mut() {
                values.push(&p.value.values);
                slots.push(&mut p.grad.values);
            }
            let weights = GruWeights {
                w_r: values[0],
                u_r: values[1],
                b_r: values[2],
                w_z: values[3],
                u_z: values[4],
                b_z: values[5],
                w_n: values[6],
                u_n: values[7],
                b_n: values[8],
            };
            let mut it = slots.into_iter();
            let mut grads = GruGrads {
                w_r: it.next().unwrap(),
                u_r: it.next().unwrap(),
                b_r: it.next().unwrap(),
                w_z: it.next().unwrap(),
                u_z: it.next().unwrap(),
                b_z: it.next().unwrap(),
                w_n: it.next().unwrap(),
                u_n: it.next().unwrap(),
                b_n: it.next().unwrap(),
            };
            gru_backward(&tape.gru_ctx, &weights, &mut grads, &grad_outputs)
        };

        // Back to [1 x F' x T'].
        let mut grad = vec![0.0; f_dim * t_dim];
        for tt in 0..t_dim {
            for f in 0..f_dim {
                grad[f * t_dim + tt] = grad_gru_in[tt * f_dim + f];
            }
        }

        // Conv stack in reverse; ReLU applies to all but the last layer.
        let n_layers = self.config.conv.len();
        for i in (0..n_layers).rev() {
            let step = &tape.conv_steps[i];
            if i + 1 < n_layers {
                relu_backward(&step.output, &mut grad);
            }
            let (weights, bias) = &mut self.conv_params[i];
            grad = conv2d_backward(
                &step.ctx,
                &grad,
                &weights.value.values,
                &mut weights.grad.values,
                &mut bias.grad.values,
            );
        }
    }

    /// Run a whole song: notes in order, threading each note's final hidden
    /// state into the next. Notes shorter than [`MIN_NOTE_FRAMES`] get a
    /// zero prediction and leave the hidden state untouched.
    pub fn forward_song(
        &self,
        features: &crate::dataset::FeatureTensor,
        segments: &[crate::align::NoteSegment],
        h_init: &[f64],
    ) -> Result<Vec<f64>> {
        if segments.is_empty() {
            return Err(Error::EmptyInput("segments"));
        }
        let mut h = h_init.to_vec();
        let mut preds = Vec::with_capacity(segments.len());
        for seg in segments {
            if seg.frames() < MIN_NOTE_FRAMES || seg.end_frame > features.frames {
                preds.push(0.0);
                continue;
            }
            let slice = features.slice_frames(
                seg.start_frame,
                seg.end_frame,
                self.config.input_channels,
            );
            let (pred, h_t, _tape) = self.forward_note(&slice, seg.frames(), &h)?;
            preds.push(pred);
            h = h_t;
        }
        Ok(preds)
    }
}

/// Saved forward state of one conv layer.
pub struct ConvStep {
    pub ctx: ConvContext,
    /// Post-activation output (the ReLU mask source).
    pub output: Vec<f64>,
}

/// Everything the backward pass needs from one note's forward pass.
pub struct NoteTape {
    conv_steps: Vec<ConvStep>,
    gru_ctx: GruContext,
    gru_last_output: Vec<f64>,
    gru_steps: usize,
    conv_out_hw: (usize, usize),
}
