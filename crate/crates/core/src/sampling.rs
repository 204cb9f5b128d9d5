//! Seeded sampling shared by every randomized check.
//!
//! All sample sets come from a PCG-64 generator (`Lcg128Xsl64`, seeded with
//! `seed_from_u64`), so a run is fully determined by its seed.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_pcg::Pcg64;

/// Thin wrapper around the seeded generator with the samplers the crate needs.
pub struct Sampler {
    rng: Pcg64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Pcg64::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        (self.uniform(lo.ln(), hi.ln())).exp()
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// Uniform direction on the unit sphere `S^{n-1}`.
    pub fn sphere(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// Uniform point of the probability simplex `{x_i > 0, Σx_i = 1}`.
    pub fn simplex(&mut self, n: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..n)
            .map(|_| -(1.0 - self.rng.random::<f64>()).ln())
            .collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|x| x / s).collect()
    }

    /// Uniform point of the ball of radius `r` in ℝⁿ.
    pub fn ball(&mut self, n: usize, r: f64) -> Vec<f64> {
        let d = self.sphere(n);
        let rho = r * self.rng.random::<f64>().powf(1.0 / n as f64);
        d.into_iter().map(|x| x * rho).collect()
    }

    /// Uniform random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.index(i + 1);
            p.swap(i, j);
        }
        p
    }
}

/// `count` points log-spaced between `lo` and `hi`, inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}
