//! Seeded uniform streams.
//!
//! Every draw comes from ChaCha20 (`rand_chacha`), keyed by
//! `rand_core::SeedableRng::seed_from_u64`, with an explicit stream id so a
//! replicate can draw several independent samples from one seed. Uniforms
//! are the top 53 bits of each `u64` scaled by `2^-53`, which keeps outputs
//! identical across platforms and crate upgrades that preserve the ChaCha
//! keystream.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

/// Recorded in experiment metadata.
pub const PRNG_NAME: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64 key expansion, 53-bit uniforms)";

/// Odd multiplier of the replicate seed schedule (2^64 / golden ratio).
pub const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed of replicate `r`: `base ⊕ (r · 0x9E3779B97F4A7C15)`.
pub fn replicate_seed(base: u64, replicate: u64) -> u64 {
    base ^ replicate.wrapping_mul(SEED_STRIDE)
}

pub struct UniformStream {
    rng: ChaCha20Rng,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    /// Uniform on `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
