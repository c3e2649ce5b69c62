//! Deterministic randomness.
//!
//! Every random draw in the engine goes through [`SeededRng`]. The generator is
//! ChaCha8 seeded from a 64-bit value, and all derived quantities (bounded
//! integers, unit floats, subsets) are computed here from raw `u64` words so
//! the streams are identical on every platform.
//!
//! Concurrent consumers never share a generator: they receive child streams
//! from [`SeededRng::derive`], keyed by an integer such as the iteration index.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream labels used when deriving per-iteration child generators.
pub mod stream {
    pub const CANDIDATES: u64 = 1;
    pub const PROBE: u64 = 2;
    pub const ANNEAL: u64 = 3;
    pub const INIT: u64 = 4;
    pub const PARAMS: u64 = 5;
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    position: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            position: 0,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Child stream keyed by `key`. Depends only on this generator's seed and
    /// the key, never on how much of the parent stream has been consumed.
    pub fn derive(&self, key: u64) -> SeededRng {
        SeededRng::new(derive_seed(self.seed, key))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.position += 1;
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, n)`, unbiased (rejection on the top zone).
    ///
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// `k` distinct indices from `[0, n)`, in draw order (partial Fisher-Yates).
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct values from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Seed of the child stream `key` under `seed`.
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ key.wrapping_mul(GOLDEN).rotate_left(23))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.position(), 100);
    }

    #[test]
    fn derive_ignores_parent_consumption() {
        let a = SeededRng::new(9);
        let mut b = SeededRng::new(9);
        b.next_u64();
        b.below(10);
        assert_eq!(a.derive(3).next_u64(), b.derive(3).next_u64());
        assert_ne!(a.derive(3).next_u64(), a.derive(4).next_u64());
    }

    #[test]
    fn golden_stream() {
        // Frozen: changing the generator or derivation breaks reproducibility
        // of every stored run log.
        let mut r = SeededRng::new(42);
        let draws: Vec<usize> = (0..6).map(|_| r.below(8)).collect();
        assert_eq!(draws, GOLDEN_BELOW8_SEED42);
    }

    const GOLDEN_BELOW8_SEED42: [usize; 6] = [1, 0, 4, 2, 0, 6];

    #[test]
    fn below_covers_range() {
        let mut r = SeededRng::new(1);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[r.below(5)] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }

    #[test]
    fn uniform_in_unit_interval() {
        let mut r = SeededRng::new(7);
        for _ in 0..1000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn sample_distinct_is_distinct() {
        let mut r = SeededRng::new(5);
        let mut s = r.sample_distinct(20, 20);
        s.sort_unstable();
        assert_eq!(s, (0..20).collect::<Vec<_>>());
        let t = r.sample_distinct(100, 7);
        assert_eq!(t.len(), 7);
        let mut u = t.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 7);
    }
}
