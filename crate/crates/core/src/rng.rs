//! Seeded randomness helpers.
//!
//! Every stochastic step in the crate draws from a [`ChaCha20Rng`] seeded
//! explicitly, so repeated runs are bit-identical. `derive_seed` splits one
//! master seed into independent streams for sub-tasks.

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
pub use rand_chacha::ChaCha20Rng;

/// Deterministically derive a sub-seed from a master seed and a stream label.
///
/// SplitMix64 finalizer over the combined words; good dispersion, stable
/// across platforms.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded generator for one stream of draws.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Uniform draw in [0, 1) with 53 bits of precision.
pub fn uniform_f64(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in [lo, hi).
pub fn uniform_in(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform_f64(rng)
}

/// Standard normal draw via Box-Muller.
pub fn normal_f64(rng: &mut ChaCha20Rng) -> f64 {
    // Guard against ln(0).
    let u1 = loop {
        let u = uniform_f64(rng);
        if u > 0.0 {
            break u;
        }
    };
    let u2 = uniform_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
}

/// Uniform integer in [0, n).
pub fn uniform_usize(rng: &mut ChaCha20Rng, n: usize) -> usize {
    debug_assert!(n > 0);
    // Rejection-free modulo is fine here: n is tiny compared to 2^64.
    (rng.next_u64() % n as u64) as usize
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha20Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = uniform_usize(rng, i + 1);
        items.swap(i, j);
    }
}
