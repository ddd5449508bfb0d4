//! Iterative radix-2 FFT with a precomputed twiddle table.
//!
//! Sized for the fixed 2048-point analysis the rest of the crate uses, but
//! works for any power of two.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// FFT plan for one transform size.
pub struct Fft {
    n: usize,
    /// exp(-2*pi*i*k/n) for k in 0..n/2.
    twiddles: Vec<Complex64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 2, "FFT size must be a power of two");
        let twiddles = (0..n / 2)
            .map(|k| {
                let ang = -core::f64::consts::TAU * k as f64 / n as f64;
                Complex64::new(ang.cos(), ang.sin())
            })
            .collect();
        Self { n, twiddles }
    }

    /// In-place forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, false);
    }

    /// In-place inverse transform, including the 1/n scaling.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.process(buf, true);
        let inv = 1.0 / self.n as f64;
        for x in buf.iter_mut() {
            *x *= inv;
        }
    }

    fn process(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(buf.len(), n, "buffer length must equal FFT size");

        // Bit-reversal permutation.
        let mut j = 0usize;
        for i in 1..n {
            let mut bit = n >> 1;
            while j & bit != 0 {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
            if i < j {
                buf.swap(i, j);
            }
        }

        let mut len = 2;
        while len <= n {
            let stride = n / len;
            let half = len / 2;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let u = buf[start + k];
                    let v = buf[start + k + half] * w;
                    buf[start + k] = u + v;
                    buf[start + k + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

/// Periodic Hann window: w[k] = 0.5 * (1 - cos(2*pi*k/n)).
///
/// Sums to a constant under the 8x overlap used by the analysis grid.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.5 * (1.0 - (core::f64::consts::TAU * k as f64 / n as f64).cos()))
        .collect()
}
