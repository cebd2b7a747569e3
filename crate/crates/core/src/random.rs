//! Seeded, splittable randomness.
//!
//! Every stream is ChaCha8 keyed by `seed` (expanded with `seed_from_u64`)
//! with the 64-bit ChaCha stream id set to `substream`. ChaCha output is
//! specified independently of platform and word size, so a `(seed, substream)`
//! pair yields the same bits everywhere. Monte Carlo drivers use one substream
//! per trial.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    substream: u64,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64, substream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(substream);
        Self { seed, substream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self) -> u64 {
        self.substream
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// `true` with probability `p`. A probability of exactly zero consumes no
    /// randomness.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            return false;
        }
        self.uniform() < p
    }

    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Mixes a root seed with a list of tags into a new seed (SplitMix64 finaliser).
///
/// Used to give each grid point or scheme of a sweep its own seed.
pub fn derive_seed(root: u64, tags: &[u64]) -> u64 {
    let mut state = root;
    for &tag in tags {
        state = splitmix(state ^ splitmix(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
