//! Seedable random-number streams with deterministic splitting.
//!
//! Every sampler in this crate draws from an [`RngStream`]. Streams are
//! cheap to split; children are keyed by `(root seed, lineage hash)` so that
//! two runs with the same seed replay the same draw sequences regardless of
//! how work is scheduled, and no two chains ever share a stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; decorrelates nearby seeds/labels.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn combine(path: u64, label: u64) -> u64 {
    mix(path ^ mix(label.wrapping_add(0xa076_1d64_78bd_642f)))
}

/// A deterministic random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    path: u64,
    splits: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_parts(seed, 0)
    }

    fn from_parts(seed: u64, path: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = mix(seed) ^ mix(path.rotate_left(17));
        for chunk in key.chunks_exact_mut(8) {
            s = mix(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Self {
            seed,
            path,
            splits: 0,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stateful split: each call yields the next independent child stream.
    pub fn split(&mut self) -> RngStream {
        let label = self.splits;
        self.splits += 1;
        Self::from_parts(self.seed, combine(self.path, label))
    }

    /// Label-addressed child stream. Does not mutate the parent, so the
    /// same `(parent, label)` pair always denotes the same stream.
    pub fn substream(&self, label: u64) -> RngStream {
        Self::from_parts(self.seed, combine(self.path, label ^ 0x8000_0000_0000_0000))
    }

    /// Uniform draw on (0, 1), bounded away from both endpoints.
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u = rand::Rng::random::<f64>(&mut self.inner);
            if u > 0.0 && u < 1.0 {
                return u;
            }
        }
    }

    /// Standard normal draw (ziggurat).
    pub fn standard_normal(&mut self) -> f64 {
        rand::Rng::sample(&mut self.inner, rand_distr::StandardNormal)
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        rand::Rng::random_range(&mut self.inner, 0..n)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}
