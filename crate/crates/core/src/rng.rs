//! Seeding and random draws.
//!
//! Every random decision in the pipeline is taken from a [`SeedRng`], a
//! ChaCha8 stream keyed by a 64-bit seed. The 32-byte ChaCha key is four
//! consecutive SplitMix64 outputs starting from the seed, so a seed maps to
//! the same stream in any implementation that follows this recipe.
//!
//! Draws consume whole 64-bit words in the order they are requested:
//!
//! * [`SeedRng::uniform`] takes one word and keeps its top 53 bits;
//! * [`SeedRng::below`] takes one word per attempt and rejects words in the
//!   biased tail, so results are exactly uniform.
//!
//! Independent streams are derived with [`mix_seed`], which is how per-sample
//! seeds are split off a master seed.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One SplitMix64 output for state `z` (state advanced by the golden gamma).
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of stream `stream` from `seed`.
///
/// `mix_seed(s, i) = splitmix64(s ^ splitmix64(i))`.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Counter-based generator with a fixed word-consumption contract.
#[derive(Clone, Debug)]
pub struct SeedRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl SeedRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = seed;
        for chunk in key.chunks_exact_mut(8) {
            let word = splitmix64(state);
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        SeedRng {
            seed,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// Generator for stream `stream` of `seed`.
    pub fn derive(seed: u64, stream: u64) -> Self {
        SeedRng::new(mix_seed(seed, stream))
    }

    /// The seed this generator was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // Largest multiple of n that fits; words at or above it are redrawn.
        let zone = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let w = self.next_u64();
            if w <= zone {
                return w % n;
            }
        }
    }

    /// Uniform index into a collection of length `n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }
}
