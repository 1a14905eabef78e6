//! Scrambled Halton points, used for space-filling designs and for the
//! standard-normal base samples of Monte Carlo entropy estimates.

use rand::seq::SliceRandom;

use crate::normal;
use crate::rng;

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131,
];

/// Halton sequence with an independent random digit permutation for every
/// (dimension, digit position) pair.
pub struct ScrambledHalton {
    dim: usize,
    perms: Vec<Vec<Vec<u32>>>,
}

impl ScrambledHalton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "scrambled Halton supports at most {} dimensions", PRIMES.len());
        let mut rng = rng::stream(seed, &[0x4841_4C54]);
        let perms = (0..dim)
            .map(|d| {
                let base = PRIMES[d];
                let digits = digits_for_precision(base);
                (0..digits)
                    .map(|_| {
                        let mut p: Vec<u32> = (0..base).collect();
                        p.shuffle(&mut rng);
                        p
                    })
                    .collect()
            })
            .collect();
        Self { dim, perms }
    }

    /// The `index`-th point (0-based) in [0,1)^dim.
    pub fn point(&self, index: u64) -> Vec<f64> {
        (0..self.dim)
            .map(|d| {
                let base = PRIMES[d] as u64;
                let inv = 1.0 / base as f64;
                let mut n = index + 1;
                let mut scale = inv;
                let mut x = 0.0;
                for perm in &self.perms[d] {
                    let digit = (n % base) as usize;
                    n /= base;
                    x += perm[digit] as f64 * scale;
                    scale *= inv;
                }
                x.min(1.0 - f64::EPSILON)
            })
            .collect()
    }

    pub fn points(&self, count: usize) -> Vec<Vec<f64>> {
        (0..count as u64).map(|i| self.point(i)).collect()
    }
}

fn digits_for_precision(base: u32) -> usize {
    ((53.0 * std::f64::consts::LN_2) / (base as f64).ln()).ceil() as usize
}

/// `count` standard-normal vectors of length `dim` obtained by mapping
/// scrambled Halton points through the normal quantile function.
pub fn normal_base_samples(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let seq = ScrambledHalton::new(dim, seed);
    (0..count as u64)
        .map(|i| {
            seq.point(i)
                .into_iter()
                .map(|u| normal::quantile(u.clamp(1e-12, 1.0 - 1e-12)))
                .collect()
        })
        .collect()
}
