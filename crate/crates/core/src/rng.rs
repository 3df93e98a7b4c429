//! Portable seeded pseudo-randomness.
//!
//! The generator is ChaCha20 (`rand_chacha::ChaCha20Rng`) keyed by
//! `seed_from_u64(seed)`; independent child streams use ChaCha's native
//! 64-bit stream id, so `(parent_seed, stream_id)` fully determines a child.
//! Integer and float conversions are done here rather than through `rand`
//! distributions so the mapping from raw words to samples never changes
//! underneath recorded golden traces.

use std::collections::HashMap;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    /// Independent generator for stream `stream_id` of this generator's seed.
    /// Does not advance `self`.
    pub fn child(&self, stream_id: u64) -> Self {
        Self::with_stream(self.seed, stream_id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in `[0, bound)` by rejection. `bound` must be nonzero.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % bound;
            }
        }
    }

    /// Random unit direction in `R^dim` (a normalized uniform cube sample).
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        assert!(dim > 0);
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.uniform_in(-1.0, 1.0)).collect();
            let n = crate::linalg::euclidean_norm(&v);
            if n > 0.0 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }

    pub fn sample_indices(&mut self, n: usize, batch: usize) -> Result<Vec<usize>> {
        sample_indices_without_replacement(self, n, batch)
    }
}

/// Draws `batch` distinct indices from `[0, n)` uniformly (a partial
/// Fisher-Yates shuffle over a sparse swap table, O(batch) memory).
pub fn sample_indices_without_replacement(
    rng: &mut SeededRng,
    n: usize,
    batch: usize,
) -> Result<Vec<usize>> {
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if batch > n {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {batch} distinct indices from {n}"
        )));
    }
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(batch);
    let mut out = Vec::with_capacity(batch);
    for i in 0..batch {
        let j = i + rng.below((n - i) as u64) as usize;
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    Ok(out)
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
    }

    #[test]
    fn reference_vectors() {
        // Pinned outputs; documented in the README so other implementations
        // can verify their generator.
        let mut r = SeededRng::new(0);
        let got: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(got, REFERENCE_SEED0);
        let mut c = SeededRng::with_stream(0, 1);
        assert_eq!(c.next_u64(), REFERENCE_SEED0_STREAM1);
    }

    pub(crate) const REFERENCE_SEED0: [u64; 3] = [
        449479075714955186,
        18115028555707261608,
        15878401910454357952,
    ];
    pub(crate) const REFERENCE_SEED0_STREAM1: u64 = 4805290024704326708;

    #[test]
    fn children_are_distinct_and_reproducible() {
        let parent = SeededRng::new(9);
        let mut c1 = parent.child(1);
        let mut c2 = parent.child(2);
        let mut c1b = parent.child(1);
        let x1 = c1.next_u64();
        assert_ne!(x1, c2.next_u64());
        assert_eq!(x1, c1b.next_u64());
    }

    #[test]
    fn uniform_range() {
        let mut r = SeededRng::new(3);
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn exhaustive_sample_is_permutation() {
        let mut r = SeededRng::new(5);
        let mut s = sample_indices_without_replacement(&mut r, 5, 5).unwrap();
        s.sort_unstable();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_index_in_range() {
        let mut r = SeededRng::new(11);
        let s = sample_indices_without_replacement(&mut r, 10, 1).unwrap();
        assert_eq!(s.len(), 1);
        assert!(s[0] < 10);
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut a = SeededRng::new(77);
        let mut b = SeededRng::new(77);
        for _ in 0..20 {
            assert_eq!(
                a.sample_indices(100, 7).unwrap(),
                b.sample_indices(100, 7).unwrap()
            );
        }
    }

    #[test]
    fn sampling_errors() {
        let mut r = SeededRng::new(1);
        assert!(sample_indices_without_replacement(&mut r, 3, 4).is_err());
        assert!(sample_indices_without_replacement(&mut r, 3, 0).is_err());
    }

    #[test]
    fn samples_are_distinct() {
        let mut r = SeededRng::new(8);
        for _ in 0..1000 {
            let mut s = r.sample_indices(20, 12).unwrap();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 12);
        }
    }

    #[test]
    fn sampling_frequencies_are_uniform() {
        let draws = 100_000usize;
        let (n, b) = (10usize, 3usize);
        let mut r = SeededRng::new(2024);
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            for i in r.sample_indices(n, b).unwrap() {
                counts[i] += 1;
            }
        }
        // Each index is included with probability p = 0.3 per draw.
        let p = b as f64 / n as f64;
        let mean = p * draws as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - mean).abs() <= 5.0 * sd,
                "index {i}: {c} vs {mean} ± 5·{sd}"
            );
        }
    }
}
