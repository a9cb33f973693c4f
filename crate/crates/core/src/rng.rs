//! Seeded, splittable random streams.
//!
//! Every stochastic step in the crate (dataset generation, splits, weight
//! init, activation assignment, dropout, shuffling) draws from an [`Rng`].
//! A stream is fully determined by its 256-bit key; [`Rng::child`] derives
//! a fresh key from the parent key and an index, so sub-streams never depend
//! on how much of the parent has been consumed.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    key: [u8; 32],
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut key);
        Self::from_key(seed, key)
    }

    fn from_key(seed: u64, key: [u8; 32]) -> Self {
        Self {
            seed,
            key,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    /// The seed this stream (or its root ancestor) was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent deterministic sub-stream `index`.
    pub fn child(&self, index: u64) -> Rng {
        let mut deriver = ChaCha8Rng::from_seed(self.key);
        // stream 0 is the parent's own output
        deriver.set_stream(index.wrapping_add(1));
        let mut key = [0u8; 32];
        deriver.fill_bytes(&mut key);
        Self::from_key(self.seed, key)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via the Box–Muller cosine branch. Consumes exactly two
    /// uniforms per call; the sine partner is discarded so that every draw
    /// has a fixed cost in the stream.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: i64, hi: i64) -> i64 {
        self.inner.random_range(lo..=hi)
    }

    /// Uniform index in `0..n`. Panics when `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct elements of `pool`, chosen uniformly without replacement.
    pub fn choose_without_replacement(&mut self, pool: &[usize], k: usize) -> Vec<usize> {
        assert!(k <= pool.len(), "cannot draw {k} from {}", pool.len());
        let mut scratch = pool.to_vec();
        for i in 0..k {
            let j = i + self.index(scratch.len() - i);
            scratch.swap(i, j);
        }
        scratch.truncate(k);
        scratch
    }
}
