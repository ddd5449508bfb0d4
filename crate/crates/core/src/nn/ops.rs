//! Forward and backward passes for the layers the shift regressor needs:
//! strided/padded 2-D convolution (via im2col + matmul), the scalar linear
//! head, ReLU, and mean-squared-error loss.
//!
//! Every backward pass is exact; the test suite checks each one against
//! central finite differences.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// out[m x n] += a[m x k] * b[k x n]
pub fn matmul_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for kk in 0..k {
            let a_ik = a[i * k + kk];
            if a_ik == 0.0 {
                continue;
            }
            let b_row = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += a_ik * bv;
            }
        }
    }
}

/// out[m x n] += a[m x k] * b^T where b is [n x k]
pub fn matmul_bt_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (av, bv) in a_row.iter().zip(b_row) {
                acc += av * bv;
            }
            out[i * n + j] += acc;
        }
    }
}

/// Shape of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (frequency, time)
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub padding: (usize, usize),
}

impl ConvSpec {
    /// Output height/width for an input of (h, w):
    /// floor((dim + 2*pad - kernel)/stride) + 1.
    pub fn output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let oh = (h + 2 * self.padding.0).checked_sub(self.kernel.0);
        let ow = (w + 2 * self.padding.1).checked_sub(self.kernel.1);
        match (oh, ow) {
            (Some(oh), Some(ow)) => Ok((oh / self.stride.0 + 1, ow / self.stride.1 + 1)),
            _ => Err(Error::ShapeMismatch(format!(
                "input {h}x{w} too small for kernel {:?} with padding {:?}",
                self.kernel, self.padding
            ))),
        }
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel.0 * self.kernel.1
    }
}

/// Saved forward state a convolution backward pass needs.
pub struct ConvContext {
    pub spec: ConvSpec,
    pub input_hw: (usize, usize),
    pub output_hw: (usize, usize),
    /// im2col matrix, [in_channels * kh * kw] x [oh * ow].
    cols: Vec<f64>,
}

fn im2col(
    input: &[f64],
    spec: &ConvSpec,
    h: usize,
    w: usize,
    oh: usize,
    ow: usize,
) -> Vec<f64> {
    let (kh, kw) = spec.kernel;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let k = spec.in_channels * kh * kw;
    let p = oh * ow;
    let mut cols = vec![0.0; k * p];
    for c in 0..spec.in_channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = &mut cols[((c * kh + ki) * kw + kj) * p..][..p];
                for oi in 0..oh {
                    let ii = (oi * sh + ki) as isize - ph as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    let src_row = &plane[ii as usize * w..(ii as usize + 1) * w];
                    let dst_row = &mut row[oi * ow..(oi + 1) * ow];
                    for (oj, dst) in dst_row.iter_mut().enumerate() {
                        let jj = (oj * sw + kj) as isize - pw as isize;
                        if jj >= 0 && jj < w as isize {
                            *dst = src_row[jj as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// 2-D convolution (cross-correlation) with zero padding.
///
/// `input` is [in_channels x h x w] row-major, `weights` is
/// [out_channels x in_channels x kh x kw], `bias` one value per output
/// channel. Returns the output and the context for the backward pass.
pub fn conv2d(
    input: &[f64],
    weights: &[f64],
    bias: &[f64],
    spec: ConvSpec,
    h: usize,
    w: usize,
) -> Result<(Vec<f64>, ConvContext)> {
    if input.len() != spec.in_channels * h * w {
        return Err(Error::ShapeMismatch(format!(
            "conv input length {} != {}x{}x{}",
            input.len(),
            spec.in_channels,
            h,
            w
        )));
    }
    if weights.len() != spec.weight_len() || bias.len() != spec.out_channels {
        return Err(Error::ShapeMismatch("conv weight/bias size".into()));
    }
    let (oh, ow) = spec.output_size(h, w)?;
    let k = spec.in_channels * spec.kernel.0 * spec.kernel.1;
    let p = oh * ow;

    let cols = im2col(input, &spec, h, w, oh, ow);
    let mut out = vec![0.0; spec.out_channels * p];
    for (co, &b) in bias.iter().enumerate() {
        out[co * p..(co + 1) * p].iter_mut().for_each(|v| *v = b);
    }
    matmul_acc(weights, &cols, &mut out, spec.out_channels, k, p);
    Ok((
        out,
        ConvContext {
            spec,
            input_hw: (h, w),
            output_hw: (oh, ow),
            cols,
        },
    ))
}

/// Gradients of a convolution w.r.t. input, weights, and bias.
///
/// `grad_weights` and `grad_bias` are accumulated into; the input gradient
/// is returned fresh.
pub fn conv2d_backward(
    ctx: &ConvContext,
    grad_out: &[f64],
    weights: &[f64],
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
) -> Vec<f64> {
    let spec = &ctx.spec;
    let (h, w) = ctx.input_hw;
    let (oh, ow) = ctx.output_hw;
    let (kh, kw) = spec.kernel;
    let (sh, sw) = spec.stride;
    let (ph, pw) = spec.padding;
    let k = spec.in_channels * kh * kw;
    let p = oh * ow;
    debug_assert_eq!(grad_out.len(), spec.out_channels * p);

    // dB[co] += sum over positions.
    for co in 0..spec.out_channels {
        grad_bias[co] += grad_out[co * p..(co + 1) * p].iter().sum::<f64>();
    }
    // dW += dOut (co x p) * cols^T (p x k)
    matmul_bt_acc(grad_out, &ctx.cols, grad_weights, spec.out_channels, p, k);

    // dCols = W^T (k x co) * dOut (co x p), fused with col2im scatter.
    let mut dcols = vec![0.0; k * p];
    for co in 0..spec.out_channels {
        let g_row = &grad_out[co * p..(co + 1) * p];
        for kk in 0..k {
            let wv = weights[co * k + kk];
            if wv == 0.0 {
                continue;
            }
            let d_row = &mut dcols[kk * p..(kk + 1) * p];
            for (d, &g) in d_row.iter_mut().zip(g_row) {
                *d += wv * g;
            }
        }
    }
    let mut grad_input = vec![0.0; spec.in_channels * h * w];
    for c in 0..spec.in_channels {
        let plane = &mut grad_input[c * h * w..(c + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = &dcols[((c * kh + ki) * kw + kj) * p..][..p];
                for oi in 0..oh {
                    let ii = (oi * sh + ki) as isize - ph as isize;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    for oj in 0..ow {
                        let jj = (oj * sw + kj) as isize - pw as isize;
                        if jj >= 0 && jj < w as isize {
                            plane[ii as usize * w + jj as usize] += row[oi * ow + oj];
                        }
                    }
                }
            }
        }
    }
    grad_input
}

/// Affine map from a vector to one scalar: dot(weights, input) + bias.
pub fn linear(input: &[f64], weights: &[f64], bias: f64) -> Result<f64> {
    if input.len() != weights.len() {
        return Err(Error::ShapeMismatch(format!(
            "linear: input {} vs weights {}",
            input.len(),
            weights.len()
        )));
    }
    Ok(input.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() + bias)
}

/// Gradients of [`linear`]: returns d/d_input, accumulates into the weight
/// and bias gradients.
pub fn linear_backward(
    input: &[f64],
    weights: &[f64],
    grad_out: f64,
    grad_weights: &mut [f64],
    grad_bias: &mut f64,
) -> Vec<f64> {
    for (gw, &x) in grad_weights.iter_mut().zip(input) {
        *gw += grad_out * x;
    }
    *grad_bias += grad_out;
    weights.iter().map(|&w| w * grad_out).collect()
}

/// Elementwise max(x, 0).
pub fn relu(input: &mut [f64]) {
    for x in input.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

/// Backward of ReLU given the forward *output* (mask is output > 0, which
/// matches the x > 0 subgradient with 0 taken at the kink).
pub fn relu_backward(output: &[f64], grad: &mut [f64]) {
    for (g, &y) in grad.iter_mut().zip(output) {
        if y <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Mean squared error over paired predictions and targets.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "mse: {} predictions vs {} targets",
            pred.len(),
            target.len()
        )));
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Gradient of [`mse_loss`] w.r.t. predictions: 2 (pred - target) / n.
pub fn mse_loss_backward(pred: &[f64], target: &[f64]) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter()
        .zip(target)
        .map(|(p, t)| 2.0 * (p - t) / n)
        .collect()
}
