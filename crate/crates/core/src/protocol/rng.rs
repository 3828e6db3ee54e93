//! Seeded challenge generation.
//!
//! Challenges come from ChaCha20 keyed with the 64-bit seed in
//! little-endian order followed by 24 zero bytes (nonce and stream zero).
//! An index in `[0, n)` is drawn from successive 32-bit outputs by
//! rejection: values at or above `⌊2³²/n⌋·n` are discarded and the first
//! accepted value is reduced mod `n`. Any implementation following these
//! two rules reproduces the same challenge sequence.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

#[derive(Debug, Clone)]
pub struct ChallengeRng {
    inner: ChaCha20Rng,
}

impl ChallengeRng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        ChallengeRng {
            inner: ChaCha20Rng::from_seed(key),
        }
    }

    /// Uniform index in `[0, n)`; `n` must be in `1..=2³²`.
    pub fn index(&mut self, n: u64) -> u64 {
        assert!((1..=1 << 32).contains(&n), "challenge space out of range");
        let zone = (1u64 << 32) / n * n;
        loop {
            let v = self.inner.next_u32() as u64;
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<u64> = {
            let mut r = ChallengeRng::new(42);
            (0..32).map(|_| r.index(1000)).collect()
        };
        let b: Vec<u64> = {
            let mut r = ChallengeRng::new(42);
            (0..32).map(|_| r.index(1000)).collect()
        };
        let c: Vec<u64> = {
            let mut r = ChallengeRng::new(43);
            (0..32).map(|_| r.index(1000)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|&x| x < 1000));
    }

    #[test]
    fn roughly_uniform() {
        let mut r = ChallengeRng::new(1);
        let mut counts = [0u32; 7];
        for _ in 0..70_000 {
            counts[r.index(7) as usize] += 1;
        }
        // each bucket has mean 10⁴ and sd ≈ 93
        assert!(
            counts.iter().all(|&c| (9_500..10_500).contains(&c)),
            "{counts:?}"
        );
    }

    #[test]
    fn unit_space() {
        let mut r = ChallengeRng::new(0);
        assert_eq!(r.index(1), 0);
        assert!(r.index(1 << 32) < 1 << 32);
    }
}
