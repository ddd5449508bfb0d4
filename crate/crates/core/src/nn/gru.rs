//! Gated recurrent unit over a variable-length sequence, with exact
//! backpropagation through time.
//!
//! Gate equations per step:
//!   r = sigmoid(W_r x + U_r h + b_r)
//!   z = sigmoid(W_z x + U_z h + b_z)
//!   n = tanh(W_n x + U_n (r*h) + b_n)
//!   h' = (1 - z)*n + z*h

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// GRU weights as flat slices, input dim D, hidden dim H.
///
/// `w_*` are [H x D] maps from the input, `u_*` are [H x H] maps from the
/// hidden state, `b_*` have length H.
pub struct GruWeights<'a> {
    pub w_r: &'a [f64],
    pub u_r: &'a [f64],
    pub b_r: &'a [f64],
    pub w_z: &'a [f64],
    pub u_z: &'a [f64],
    pub b_z: &'a [f64],
    pub w_n: &'a [f64],
    pub u_n: &'a [f64],
    pub b_n: &'a [f64],
}

/// Mutable gradient accumulators in the same layout as [`GruWeights`].
pub struct GruGrads<'a> {
    pub w_r: &'a mut [f64],
    pub u_r: &'a mut [f64],
    pub b_r: &'a mut [f64],
    pub w_z: &'a mut [f64],
    pub u_z: &'a mut [f64],
    pub b_z: &'a mut [f64],
    pub w_n: &'a mut [f64],
    pub u_n: &'a mut [f64],
    pub b_n: &'a mut [f64],
}

/// Per-step state saved by the forward pass for BPTT.
pub struct GruContext {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub steps: usize,
    inputs: Vec<f64>,  // T x D
    h_prev: Vec<f64>,  // T x H (state entering each step)
    r: Vec<f64>,       // T x H
    z: Vec<f64>,       // T x H
    n: Vec<f64>,       // T x H
}

fn matvec(mat: &[f64], x: &[f64], out: &mut [f64], rows: usize, cols: usize) {
    debug_assert_eq!(mat.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    for i in 0..rows {
        let row = &mat[i * cols..(i + 1) * cols];
        let mut acc = 0.0;
        for (m, v) in row.iter().zip(x) {
            acc += m * v;
        }
        out[i] += acc;
    }
}

/// Accumulate the outer product g x^T into a [rows x cols] gradient.
fn outer_acc(grad: &mut [f64], g: &[f64], x: &[f64], rows: usize, cols: usize) {
    for i in 0..rows {
        let gi = g[i];
        if gi == 0.0 {
            continue;
        }
        let row = &mut grad[i * cols..(i + 1) * cols];
        for (r, &xv) in row.iter_mut().zip(x) {
            *r += gi * xv;
        }
    }
}

/// Accumulate M^T g into `out` (length cols) for M of [rows x cols].
fn matvec_t(mat: &[f64], g: &[f64], out: &mut [f64], rows: usize, cols: usize) {
    for i in 0..rows {
        let gi = g[i];
        if gi == 0.0 {
            continue;
        }
        let row = &mat[i * cols..(i + 1) * cols];
        for (o, &m) in out.iter_mut().zip(row) {
            *o += gi * m;
        }
    }
}

/// Run the GRU over `inputs` (T x D row-major) starting from `h0`.
///
/// Returns the per-step outputs (T x H), the final hidden state, and the
/// context the backward pass needs.
pub fn gru_sequence(
    inputs: &[f64],
    h0: &[f64],
    weights: &GruWeights<'_>,
    input_dim: usize,
) -> Result<(Vec<f64>, Vec<f64>, GruContext)> {
    let hidden = h0.len();
    if input_dim == 0 || inputs.len() % input_dim != 0 || inputs.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "gru inputs length {} not a positive multiple of dim {input_dim}",
            inputs.len()
        )));
    }
    if weights.w_r.len() != hidden * input_dim || weights.u_r.len() != hidden * hidden {
        return Err(Error::ShapeMismatch("gru weight shapes".into()));
    }
    let steps = inputs.len() / input_dim;

    let mut outputs = Vec::with_capacity(steps * hidden);
    let mut ctx = GruContext {
        input_dim,
        hidden_dim: hidden,
        steps,
        inputs: inputs.to_vec(),
        h_prev: Vec::with_capacity(steps * hidden),
        r: Vec::with_capacity(steps * hidden),
        z: Vec::with_capacity(steps * hidden),
        n: Vec::with_capacity(steps * hidden),
    };

    let mut h = h0.to_vec();
    let mut rh = vec![0.0; hidden];
    for t in 0..steps {
        let x = &inputs[t * input_dim..(t + 1) * input_dim];
        ctx.h_prev.extend_from_slice(&h);

        let mut a_r = weights.b_r.to_vec();
        matvec(weights.w_r, x, &mut a_r, hidden, input_dim);
        matvec(weights.u_r, &h, &mut a_r, hidden, hidden);
        let r: Vec<f64> = a_r.iter().map(|&a| sigmoid(a)).collect();

        let mut a_z = weights.b_z.to_vec();
        matvec(weights.w_z, x, &mut a_z, hidden, input_dim);
        matvec(weights.u_z, &h, &mut a_z, hidden, hidden);
        let z: Vec<f64> = a_z.iter().map(|&a| sigmoid(a)).collect();

        for i in 0..hidden {
            rh[i] = r[i] * h[i];
        }
        let mut a_n = weights.b_n.to_vec();
        matvec(weights.w_n, x, &mut a_n, hidden, input_dim);
        matvec(weights.u_n, &rh, &mut a_n, hidden, hidden);
        let n: Vec<f64> = a_n.iter().map(|&a| a.tanh()).collect();

        for i in 0..hidden {
            h[i] = (1.0 - z[i]) * n[i] + z[i] * h[i];
        }
        outputs.extend_from_slice(&h);
        ctx.r.extend_from_slice(&r);
        ctx.z.extend_from_slice(&z);
        ctx.n.extend_from_slice(&n);
    }
    Ok((outputs, h, ctx))
}

/// Backpropagate through the whole sequence.
///
/// `grad_outputs` is T x H (gradient w.r.t. every step's output; pass zeros
/// except the last step when only the final output feeds the loss).
/// Returns (grad_inputs T x D, grad_h0).
pub fn gru_backward(
    ctx: &GruContext,
    weights: &GruWeights<'_>,
    grads: &mut GruGrads<'_>,
    grad_outputs: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let hd = ctx.hidden_dim;
    let id = ctx.input_dim;
    debug_assert_eq!(grad_outputs.len(), ctx.steps * hd);

    let mut grad_inputs = vec![0.0; ctx.steps * id];
    let mut dh = vec![0.0; hd];
    let mut da_r = vec![0.0; hd];
    let mut da_z = vec![0.0; hd];
    let mut da_n = vec![0.0; hd];
    let mut drh = vec![0.0; hd];
    let mut rh = vec![0.0; hd];

    for t in (0..ctx.steps).rev() {
        let x = &ctx.inputs[t * id..(t + 1) * id];
        let h_prev = &ctx.h_prev[t * hd..(t + 1) * hd];
        let r = &ctx.r[t * hd..(t + 1) * hd];
        let z = &ctx.z[t * hd..(t + 1) * hd];
        let n = &ctx.n[t * hd..(t + 1) * hd];

        for i in 0..hd {
            dh[i] += grad_outputs[t * hd + i];
        }

        // h' = (1-z) n + z h_prev
        let mut dh_prev = vec![0.0; hd];
        for i in 0..hd {
            let dz = dh[i] * (h_prev[i] - n[i]);
            da_z[i] = dz * z[i] * (1.0 - z[i]);
            let dn = dh[i] * (1.0 - z[i]);
            da_n[i] = dn * (1.0 - n[i] * n[i]);
            dh_prev[i] = dh[i] * z[i];
        }

        // n = tanh(W_n x + U_n (r h) + b_n)
        drh.iter_mut().for_each(|v| *v = 0.0);
        matvec_t(weights.u_n, &da_n, &mut drh, hd, hd);
        for i in 0..hd {
            let dr = drh[i] * h_prev[i];
            da_r[i] = dr * r[i] * (1.0 - r[i]);
            dh_prev[i] += drh[i] * r[i];
        }

        // Parameter gradients.
        outer_acc(grads.w_r, &da_r, x, hd, id);
        outer_acc(grads.w_z, &da_z, x, hd, id);
        outer_acc(grads.w_n, &da_n, x, hd, id);
        outer_acc(grads.u_r, &da_r, h_prev, hd, hd);
        outer_acc(grads.u_z, &da_z, h_prev, hd, hd);
        for i in 0..hd {
            rh[i] = r[i] * h_prev[i];
        }
        outer_acc(grads.u_n, &da_n, &rh, hd, hd);
        for i in 0..hd {
            grads.b_r[i] += da_r[i];
            grads.b_z[i] += da_z[i];
            grads.b_n[i] += da_n[i];
        }

        // Input gradient.
        let gx = &mut grad_inputs[t * id..(t + 1) * id];
        matvec_t(weights.w_r, &da_r, gx, hd, id);
        matvec_t(weights.w_z, &da_z, gx, hd, id);
        matvec_t(weights.w_n, &da_n, gx, hd, id);

        // Hidden-state gradient into the previous step.
        matvec_t(weights.u_r, &da_r, &mut dh_prev, hd, hd);
        matvec_t(weights.u_z, &da_z, &mut dh_prev, hd, hd);
        dh = dh_prev;
    }
    (grad_inputs, dh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_weights(d: usize, h: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![0.0; h * d], vec![0.0; h * h], vec![0.0; h])
    }

    #[test]
    fn zero_params_fixed_point_at_zero() {
        let (d, h) = (3, 4);
        let (w, u, b) = zero_weights(d, h);
        let weights = GruWeights {
            w_r: &w,
            u_r: &u,
            b_r: &b,
            w_z: &w,
            u_z: &u,
            b_z: &b,
            w_n: &w,
            u_n: &u,
            b_n: &b,
        };
        let inputs = vec![0.5; 5 * d];
        let h0 = vec![0.0; h];
        let (outputs, h_t, _) = gru_sequence(&inputs, &h0, &weights, d).unwrap();
        assert!(outputs.iter().all(|&v| v == 0.0));
        assert!(h_t.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_step_equals_cell() {
        let (d, h) = (2, 3);
        let mut state = 1u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
            ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.8
        };
        let w_r: Vec<f64> = (0..h * d).map(|_| next()).collect();
        let u_r: Vec<f64> = (0..h * h).map(|_| next()).collect();
        let b_r: Vec<f64> = (0..h).map(|_| next()).collect();
        let weights = GruWeights {
            w_r: &w_r,
            u_r: &u_r,
            b_r: &b_r,
            w_z: &w_r,
            u_z: &u_r,
            b_z: &b_r,
            w_n: &w_r,
            u_n: &u_r,
            b_n: &b_r,
        };
        let x: Vec<f64> = (0..d).map(|_| next()).collect();
        let h0: Vec<f64> = (0..h).map(|_| next()).collect();
        let (out, h_t, _) = gru_sequence(&x, &h0, &weights, d).unwrap();
        assert_eq!(out.len(), h);
        assert_eq!(out, h_t);

        // Manual single cell.
        for i in 0..h {
            let dot =
                |m: &[f64], v: &[f64], cols: usize| -> f64 {
                    m[i * cols..(i + 1) * cols]
                        .iter()
                        .zip(v)
                        .map(|(a, b)| a * b)
                        .sum()
                };
            let r = sigmoid(dot(&w_r, &x, d) + dot(&u_r, &h0, h) + b_r[i]);
            let z = r; // same weights by construction
            let rh: Vec<f64> = (0..h).map(|j| {
                let rj = sigmoid(
                    w_r[j * d..(j + 1) * d]
                        .iter()
                        .zip(&x)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        + u_r[j * h..(j + 1) * h]
                            .iter()
                            .zip(&h0)
                            .map(|(a, b)| a * b)
                            .sum::<f64>()
                        + b_r[j],
                );
                rj * h0[j]
            }).collect();
            let n = (dot(&w_r, &x, d) + dot(&u_r, &rh, h) + b_r[i]).tanh();
            let expect = (1.0 - z) * n + z * h0[i];
            assert!((h_t[i] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let (d, h) = (2, 3);
        let (w, u, b) = zero_weights(d, h);
        let weights = GruWeights {
            w_r: &w,
            u_r: &u,
            b_r: &b,
            w_z: &w,
            u_z: &u,
            b_z: &b,
            w_n: &w,
            u_n: &u,
            b_n: &b,
        };
        let h0 = vec![0.0; h];
        assert!(gru_sequence(&[1.0, 2.0, 3.0], &h0, &weights, d).is_err());
        assert!(gru_sequence(&[], &h0, &weights, d).is_err());
    }
}
