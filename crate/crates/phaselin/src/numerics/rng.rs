//! Deterministic random generation.
//!
//! All randomness in the crate flows through [`SeededRng`], a ChaCha8 stream
//! seeded from a 64-bit value. Substreams are derived by SplitMix64 mixing of
//! (seed, label) so that independent pieces of a computation (ensemble draw,
//! signal draw, corruption, initializer) consume disjoint streams and stay
//! reproducible bit-for-bit regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of labels into a new 64-bit seed.
///
/// The mixing is `fold(splitmix64(base), h ↦ splitmix64(h ⊕ splitmix64(label)))`,
/// fixed for all time; benchmark reproducibility depends on it.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix64(base), |h, &l| splitmix64(h ^ splitmix64(l)))
}

/// Seeded generator (ChaCha8) with convenience samplers.
#[derive(Clone, Debug)]
pub struct SeededRng {
    inner: ChaCha8Rng,
    seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            seed,
        }
    }

    /// The seed this generator was constructed from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh generator for the substream named by `label`, independent of
    /// this generator's position.
    pub fn substream(&self, label: u64) -> Self {
        Self::new(derive_seed(self.seed, &[label]))
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Standard Cauchy scaled by `scale`, sampled by inverting the CDF.
    pub fn cauchy(&mut self, scale: f64) -> f64 {
        let u: f64 = self.inner.random();
        scale * (std::f64::consts::PI * (u - 0.5)).tan()
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random()
    }

    /// Uniform index in 0..n.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Vector of iid standard normals.
    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    /// Uniform point on the unit sphere in R^n.
    pub fn unit_vector(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v = self.normal_vec(n);
            let nrm = crate::numerics::norm2(&v);
            if nrm > 1e-12 {
                return v.into_iter().map(|x| x / nrm).collect();
            }
        }
    }

    /// Sign vector with iid ±1 entries.
    pub fn sign_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| if self.inner.random::<bool>() { 1.0 } else { -1.0 })
            .collect()
    }

    /// `count` distinct indices drawn uniformly without replacement from
    /// 0..n, by partial Fisher-Yates.
    pub fn distinct_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.inner.random_range(0..n - i);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}
