//! Deterministic derivation of per-purpose random streams.
//!
//! Every random draw in the crate flows through a stream derived from a
//! master seed, a purpose tag, and a list of indices. Distinct (purpose,
//! indices) pairs yield independent streams, so frames, rows, and
//! repetitions can be sampled in any order or in parallel while remaining
//! bit-for-bit reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A master seed from which purpose-tagged streams are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpace {
    master: u64,
}

impl SeedSpace {
    pub fn new(master: u64) -> Self {
        SeedSpace { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Derives a 64-bit sub-seed for `(purpose, indices)`.
    pub fn derive(&self, purpose: &str, indices: &[u64]) -> u64 {
        let mut h = mix64(self.master.wrapping_add(GAMMA));
        for chunk in purpose.as_bytes().chunks(8) {
            let mut w = [0u8; 8];
            w[..chunk.len()].copy_from_slice(chunk);
            h = mix64(h.wrapping_add(GAMMA).wrapping_add(u64::from_le_bytes(w)));
        }
        h = mix64(h.wrapping_add(GAMMA).wrapping_add(indices.len() as u64));
        for &ix in indices {
            h = mix64(h.wrapping_add(GAMMA).wrapping_add(ix));
        }
        h
    }

    /// Opens the random stream for `(purpose, indices)`.
    pub fn stream(&self, purpose: &str, indices: &[u64]) -> ChaCha8Rng {
        let mut state = self.derive(purpose, indices);
        let mut key = [0u8; 32];
        for word in key.chunks_exact_mut(8) {
            state = state.wrapping_add(GAMMA);
            word.copy_from_slice(&mix64(state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let a = SeedSpace::new(7);
        let mut r1 = a.stream("x", &[1, 2]);
        let mut r2 = a.stream("x", &[1, 2]);
        let v1: Vec<u64> = (0..8).map(|_| r1.random()).collect();
        let v2: Vec<u64> = (0..8).map(|_| r2.random()).collect();
        assert_eq!(v1, v2);
    }

    #[test]
    fn streams_differ_by_purpose_and_index() {
        let a = SeedSpace::new(7);
        let base: u64 = a.stream("x", &[1]).random();
        assert_ne!(base, a.stream("y", &[1]).random());
        assert_ne!(base, a.stream("x", &[2]).random());
        assert_ne!(base, SeedSpace::new(8).stream("x", &[1]).random());
        // index list boundaries matter, not just the concatenation
        assert_ne!(
            a.stream("x", &[1, 0]).random::<u64>(),
            a.stream("x", &[1]).random::<u64>()
        );
    }
}
