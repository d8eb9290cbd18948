//! Seedable, splittable random streams.
//!
//! Every random quantity in the crate is drawn from a [`StreamRng`], a ChaCha8
//! keystream addressed by a 64-bit seed and a 64-bit stream id. ChaCha is a
//! counter-mode generator, so distinct stream ids under one seed are
//! independent and any job can be regenerated from `(root, path)` alone,
//! whatever order the jobs run in.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a root seed and a path of indices, e.g.
/// `(root, [cell, trial])`.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(root ^ 0x9e37_79b9_7f4a_7c15), |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    })
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// Opens stream `stream` of the keystream for `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner, seed }
    }

    pub fn derive(root: u64, path: &[u64]) -> Self {
        Self::new(derive_seed(root, path))
    }

    /// Seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Splits off an independent child stream, advancing `self`.
    pub fn split(&mut self) -> Self {
        Self::new(mix64(self.inner.next_u64()))
    }

    /// Uniform draw from `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw from the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin.
    pub fn next_sign(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = StreamRng::new(11);
        let mut b = StreamRng::new(11);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = StreamRng::with_stream(11, 0);
        let mut b = StreamRng::with_stream(11, 1);
        assert_ne!(a.next_u64(), b.next_u64());
        assert_ne!(derive_seed(3, &[0, 1]), derive_seed(3, &[1, 0]));
        assert_ne!(derive_seed(3, &[0]), derive_seed(4, &[0]));
    }

    #[test]
    fn uniform_ranges() {
        let mut r = StreamRng::new(5);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
            let v = r.uniform_open();
            assert!(v > 0.0 && v < 1.0);
        }
    }
}
