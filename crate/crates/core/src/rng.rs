//! Seeded, splittable randomness.
//!
//! Every sampler in the crate takes `&mut impl Rng`; [`RandomStream`] is the
//! concrete source used by the CLI and the experiment runner. Streams split
//! from the same seed are independent ChaCha streams, so concurrent workers
//! never share mutable state.

use rand::{Error as RandError, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    inner: ChaCha20Rng,
}

impl RandomStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream number `index` derived from the same seed.
    pub fn split(&self, index: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(self.seed);
        // Stream 0 is the parent.
        inner.set_stream(index.wrapping_add(1));
        Self {
            seed: self.seed,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stream with a fresh seed mixed from this seed and `index`; unlike
    /// [`split`](Self::split) it can itself be split again.
    pub fn derive(&self, index: u64) -> Self {
        Self::from_seed(splitmix64(self.seed ^ splitmix64(index)))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), RandError> {
        self.inner.try_fill_bytes(dest)
    }
}
