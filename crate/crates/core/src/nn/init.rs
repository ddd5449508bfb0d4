//! He-normal parameter initialization.

use crate::nn::Tensor;
use crate::rng::{normal_f64, rng_from_seed};
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Draw a tensor i.i.d. from N(0, 2/fan_in).
pub fn he_init(shape: &[usize], fan_in: usize, seed: u64) -> Tensor {
    assert!(fan_in > 0, "fan_in must be positive");
    let std = (2.0 / fan_in as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    let n: usize = shape.iter().product();
    Tensor::from_values(shape, (0..n).map(|_| std * normal_f64(&mut rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics_match_distribution() {
        // fan_in 2 gives unit std.
        let t = he_init(&[100_000], 2, 42);
        let n = t.numel() as f64;
        let mean = t.values.iter().sum::<f64>() / n;
        let std = (t.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((std - 1.0).abs() < 0.05, "std {std}");
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = he_init(&[64, 32], 32, 7);
        let b = he_init(&[64, 32], 32, 7);
        assert_eq!(a.values, b.values);
        let c = he_init(&[64, 32], 32, 8);
        assert_ne!(a.values, c.values);
    }
}
