//! Central finite-difference checks for every backward pass.
//!
//! The probe trick turns each op into a scalar function: loss = dot(output,
//! fixed random probe), whose analytic gradient is the backward pass run
//! with the probe as incoming gradient.

use retune_core::nn::{
    conv2d, conv2d_backward, gru_backward, gru_sequence, linear, linear_backward, mse_loss,
    mse_loss_backward, relu, relu_backward, ConvSpec, GruGrads, GruWeights,
};
use retune_core::rng::{rng_from_seed, uniform_in, uniform_usize, ChaCha20Rng};

const FD_STEP: f64 = 1e-5;

/// Guarded relative error: tiny gradients fall back to an absolute scale so
/// finite-difference roundoff does not dominate the comparison.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
}

fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &mut Vec<f64>, i: usize) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_STEP;
    let fp = f(x);
    x[i] = orig - FD_STEP;
    let fm = f(x);
    x[i] = orig;
    (fp - fm) / (2.0 * FD_STEP)
}

fn rand_vec(rng: &mut ChaCha20Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| uniform_in(rng, -scale, scale)).collect()
}

/// Check one conv configuration; if `sample` is Some(k), only k random
/// indices per tensor are probed (all biases always are).
fn check_conv(spec: ConvSpec, h: usize, w: usize, seed: u64, sample: Option<usize>) -> f64 {
    let mut rng = rng_from_seed(seed);
    let input = rand_vec(&mut rng, spec.in_channels * h * w, 1.0);
    let weights = rand_vec(&mut rng, spec.weight_len(), 0.5);
    let bias = rand_vec(&mut rng, spec.out_channels, 0.5);
    let (out, ctx) = conv2d(&input, &weights, &bias, spec, h, w).unwrap();
    let probe = rand_vec(&mut rng, out.len(), 1.0);

    let mut gw = vec![0.0; weights.len()];
    let mut gb = vec![0.0; bias.len()];
    let gi = conv2d_backward(&ctx, &probe, &weights, &mut gw, &mut gb);

    let loss_for = |inp: &[f64], wts: &[f64], bs: &[f64]| -> f64 {
        let (o, _) = conv2d(inp, wts, bs, spec, h, w).unwrap();
        o.iter().zip(&probe).map(|(a, b)| a * b).sum()
    };

    let mut worst = 0.0f64;
    let pick = |rng: &mut ChaCha20Rng, len: usize, k: Option<usize>| -> Vec<usize> {
        match k {
            Some(k) if k < len => (0..k).map(|_| uniform_usize(rng, len)).collect(),
            _ => (0..len).collect(),
        }
    };

    let mut x = input.clone();
    for i in pick(&mut rng, x.len(), sample) {
        let fd = central_diff(&mut |v| loss_for(v, &weights, &bias), &mut x, i);
        worst = worst.max(rel_err(fd, gi[i]));
    }
    let mut x = weights.clone();
    for i in pick(&mut rng, x.len(), sample) {
        let fd = central_diff(&mut |v| loss_for(&input, v, &bias), &mut x, i);
        worst = worst.max(rel_err(fd, gw[i]));
    }
    let mut x = bias.clone();
    for i in 0..x.len() {
        let fd = central_diff(&mut |v| loss_for(&input, &weights, v), &mut x, i);
        worst = worst.max(rel_err(fd, gb[i]));
    }
    worst
}

#[test]
fn conv_gradients_random_small_instances() {
    let mut rng = rng_from_seed(0xC0);
    let mut worst = 0.0f64;
    for trial in 0..20 {
        let spec = ConvSpec {
            in_channels: 1 + uniform_usize(&mut rng, 3),
            out_channels: 1 + uniform_usize(&mut rng, 3),
            kernel: (1 + uniform_usize(&mut rng, 3), 1 + uniform_usize(&mut rng, 3)),
            stride: (1 + uniform_usize(&mut rng, 2), 1 + uniform_usize(&mut rng, 2)),
            padding: (uniform_usize(&mut rng, 2), uniform_usize(&mut rng, 2)),
        };
        let h = spec.kernel.0 + 2 + uniform_usize(&mut rng, 4);
        let w = spec.kernel.1 + 2 + uniform_usize(&mut rng, 4);
        let err = check_conv(spec, h, w, 1000 + trial, None);
        worst = worst.max(err);
    }
    assert!(worst <= 1e-5, "worst relative error {worst}");
}

#[test]
fn conv_gradient_fixed_small_instance() {
    // Full sweep on a 2x6x7 input.
    let spec = ConvSpec {
        in_channels: 2,
        out_channels: 3,
        kernel: (3, 3),
        stride: (1, 1),
        padding: (1, 1),
    };
    let err = check_conv(spec, 6, 7, 7, None);
    assert!(err <= 1e-6, "max relative error {err}");
}

/// The six production conv layer geometries (full channel counts, sampled
/// parameter probes).
pub fn production_conv_specs() -> Vec<(ConvSpec, usize, usize)> {
    let layer = |ci, co, k: (usize, usize), s: (usize, usize), p: (usize, usize)| ConvSpec {
        in_channels: ci,
        out_channels: co,
        kernel: k,
        stride: s,
        padding: p,
    };
    vec![
        (layer(3, 128, (5, 5), (1, 2), (2, 2)), 16, 12),
        (layer(128, 64, (5, 5), (1, 2), (2, 2)), 16, 6),
        (layer(64, 64, (3, 3), (2, 2), (1, 1)), 16, 3),
        (layer(64, 64, (3, 3), (1, 1), (1, 1)), 8, 2),
        (layer(64, 8, (48, 1), (1, 1), (24, 1)), 8, 2),
        (layer(8, 1, (1, 1), (1, 1), (0, 0)), 9, 3),
    ]
}

#[test]
fn conv_gradients_production_geometries() {
    let mut worst = 0.0f64;
    for (i, (spec, h, w)) in production_conv_specs().into_iter().enumerate() {
        let err = check_conv(spec, h, w, 2000 + i as u64, Some(48));
        worst = worst.max(err);
    }
    assert!(worst <= 1e-5, "worst relative error {worst}");
}

#[test]
fn gru_gradients_full_sweep() {
    let (t_steps, d, h) = (4usize, 3usize, 2usize);
    let mut rng = rng_from_seed(0x6B);
    let mut worst = 0.0f64;
    for _trial in 0..20 {
        let tensors: Vec<Vec<f64>> = vec![
            rand_vec(&mut rng, h * d, 0.8), // w_r
            rand_vec(&mut rng, h * h, 0.8), // u_r
            rand_vec(&mut rng, h, 0.4),     // b_r
            rand_vec(&mut rng, h * d, 0.8),
            rand_vec(&mut rng, h * h, 0.8),
            rand_vec(&mut rng, h, 0.4),
            rand_vec(&mut rng, h * d, 0.8),
            rand_vec(&mut rng, h * h, 0.8),
            rand_vec(&mut rng, h, 0.4),
        ];
        let inputs = rand_vec(&mut rng, t_steps * d, 1.0);
        let h0 = rand_vec(&mut rng, h, 0.5);
        let probe = rand_vec(&mut rng, t_steps * h, 1.0);

        let loss_for = |ts: &[Vec<f64>], inp: &[f64], h0v: &[f64]| -> f64 {
            let weights = GruWeights {
                w_r: &ts[0],
                u_r: &ts[1],
                b_r: &ts[2],
                w_z: &ts[3],
                u_z: &ts[4],
                b_z: &ts[5],
                w_n: &ts[6],
                u_n: &ts[7],
                b_n: &ts[8],
            };
            let (out, _, _) = gru_sequence(inp, h0v, &weights, d).unwrap();
            out.iter().zip(&probe).map(|(a, b)| a * b).sum()
        };

        // Analytic gradients.
        let weights = GruWeights {
            w_r: &tensors[0],
            u_r: &tensors[1],
            b_r: &tensors[2],
            w_z: &tensors[3],
            u_z: &tensors[4],
            b_z: &tensors[5],
            w_n: &tensors[6],
            u_n: &tensors[7],
            b_n: &tensors[8],
        };
        let (_, _, ctx) = gru_sequence(&inputs, &h0, &weights, d).unwrap();
        let mut g: Vec<Vec<f64>> = tensors.iter().map(|t| vec![0.0; t.len()]).collect();
        let (g0, g1, g2, g3, g4, g5, g6, g7, g8) = {
            let mut it = g.iter_mut();
            (
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
                it.next().unwrap(),
            )
        };
        let mut grads = GruGrads {
            w_r: g0,
            u_r: g1,
            b_r: g2,
            w_z: g3,
            u_z: g4,
            b_z: g5,
            w_n: g6,
            u_n: g7,
            b_n: g8,
        };
        let (gi, gh0) = gru_backward(&ctx, &weights, &mut grads, &probe);

        // FD over every parameter tensor.
        for ti in 0..9 {
            let mut ts = tensors.clone();
            for i in 0..ts[ti].len() {
                let orig = ts[ti][i];
                ts[ti][i] = orig + FD_STEP;
                let fp = loss_for(&ts, &inputs, &h0);
                ts[ti][i] = orig - FD_STEP;
                let fm = loss_for(&ts, &inputs, &h0);
                ts[ti][i] = orig;
                let fd = (fp - fm) / (2.0 * FD_STEP);
                worst = worst.max(rel_err(fd, g[ti][i]));
            }
        }
        // FD over inputs and h0.
        let mut x = inputs.clone();
        for i in 0..x.len() {
            let fd = central_diff(&mut |v| loss_for(&tensors, v, &h0), &mut x, i);
            worst = worst.max(rel_err(fd, gi[i]));
        }
        let mut x = h0.clone();
        for i in 0..x.len() {
            let fd = central_diff(&mut |v| loss_for(&tensors, &inputs, v), &mut x, i);
            worst = worst.max(rel_err(fd, gh0[i]));
        }
    }
    assert!(worst <= 1e-6, "worst relative error {worst}");
}

#[test]
fn linear_gradients() {
    let mut rng = rng_from_seed(0x11);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 1 + uniform_usize(&mut rng, 12);
        let input = rand_vec(&mut rng, n, 1.0);
        let weights = rand_vec(&mut rng, n, 1.0);
        let bias = uniform_in(&mut rng, -1.0, 1.0);

        let mut gw = vec![0.0; n];
        let mut gb = 0.0;
        let gi = linear_backward(&input, &weights, 1.0, &mut gw, &mut gb);

        let mut x = input.clone();
        for i in 0..n {
            let fd = central_diff(&mut |v| linear(v, &weights, bias).unwrap(), &mut x, i);
            worst = worst.max(rel_err(fd, gi[i]));
        }
        let mut x = weights.clone();
        for i in 0..n {
            let fd = central_diff(&mut |v| linear(&input, v, bias).unwrap(), &mut x, i);
            worst = worst.max(rel_err(fd, gw[i]));
        }
        let fd_bias = {
            let fp = linear(&input, &weights, bias + FD_STEP).unwrap();
            let fm = linear(&input, &weights, bias - FD_STEP).unwrap();
            (fp - fm) / (2.0 * FD_STEP)
        };
        worst = worst.max(rel_err(fd_bias, gb));
    }
    assert!(worst <= 1e-8, "worst relative error {worst}");
}

#[test]
fn relu_gradient_is_positive_mask() {
    let mut rng = rng_from_seed(0x22);
    for _ in 0..20 {
        let x = rand_vec(&mut rng, 64, 2.0);
        let mut y = x.clone();
        relu(&mut y);
        let mut g = vec![1.0; 64];
        relu_backward(&y, &mut g);
        for i in 0..64 {
            assert_eq!(g[i], if x[i] > 0.0 { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn mse_gradients() {
    let mut rng = rng_from_seed(0x33);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = 1 + uniform_usize(&mut rng, 10);
        let pred = rand_vec(&mut rng, n, 1.0);
        let target = rand_vec(&mut rng, n, 1.0);
        let g = mse_loss_backward(&pred, &target);
        let mut x = pred.clone();
        for i in 0..n {
            let fd = central_diff(&mut |v| mse_loss(v, &target).unwrap(), &mut x, i);
            worst = worst.max(rel_err(fd, g[i]));
        }
    }
    assert!(worst <= 1e-8, "worst relative error {worst}");
}
