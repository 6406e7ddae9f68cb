//! Reproducible random streams.
//!
//! A [`RandomStream`] wraps a ChaCha8 generator, which is counter based: the
//! output is a pure function of `(key, stream id, word position)`. Child
//! streams are derived from the parent's identity and an index, never from
//! its current position, so `split(i)` returns the same stream no matter how
//! many variates the parent has already produced.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RandomStream {
    key: [u64; 4],
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        let mut state = seed ^ 0x5EED_5EED_5EED_5EED;
        let key = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self::from_key(key)
    }

    fn from_key(key: [u64; 4]) -> Self {
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes.chunks_exact_mut(8).zip(key.iter()) {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        Self {
            key,
            rng: ChaCha8Rng::from_seed(bytes),
        }
    }

    /// Independent child stream identified by `index`.
    pub fn split(&self, index: u64) -> Self {
        let mut state = index.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
        let mut key = [0u64; 4];
        for (i, k) in key.iter_mut().enumerate() {
            state ^= self.key[i];
            *k = splitmix64(&mut state);
        }
        Self::from_key(key)
    }

    /// Child stream identified by a label, e.g. `"target"` or `"chains"`.
    pub fn split_named(&self, label: &str) -> Self {
        self.split(fnv1a64(label.as_bytes()))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform variate in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.rng.sample(StandardNormal);
        }
    }

    pub fn standard_normal_vec(&mut self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.fill_standard_normal(&mut out);
        out
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = RandomStream::new(7);
        let mut b = RandomStream::new(7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
    }

    #[test]
    fn split_ignores_parent_position() {
        let parent = RandomStream::new(3);
        let mut advanced = parent.clone();
        for _ in 0..17 {
            advanced.next_u64();
        }
        let mut c1 = parent.split(5);
        let mut c2 = advanced.split(5);
        assert_eq!(c1.next_u64(), c2.next_u64());
    }

    #[test]
    fn children_differ() {
        let parent = RandomStream::new(3);
        let mut c1 = parent.split(0);
        let mut c2 = parent.split(1);
        let mut c3 = parent.split_named("target");
        let (a, b, c) = (c1.next_u64(), c2.next_u64(), c3.next_u64());
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(RandomStream::new(1).next_u64(), RandomStream::new(2).next_u64());
    }

    #[test]
    fn uniform_in_unit_interval_with_right_mean() {
        let mut s = RandomStream::new(11);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        // sd of the mean is sqrt(1/12/n) ~ 9.1e-4
        assert!((sum / n as f64 - 0.5).abs() < 4e-3);
    }
}
