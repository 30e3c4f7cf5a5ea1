//! Deterministic random sampling for the empirical checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::Vector;

pub const DEFAULT_SEED: u64 = 42;

/// Seeded generator owned by one check; never shared.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn unit_vector(&mut self, dim: usize) -> Vector {
        loop {
            let g: Vec<f64> = (0..dim).map(|_| self.rng.sample(StandardNormal)).collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                return Vector::from_raw(g.into_iter().map(|x| x / n).collect());
            }
        }
    }

    /// Uniform point in the closed ball of `radius` about the origin.
    pub fn in_ball(&mut self, dim: usize, radius: f64) -> Vector {
        let u: f64 = self.rng.random();
        let r = radius * u.powf(1.0 / dim as f64);
        self.unit_vector(dim).scale(r)
    }

    pub fn matrix_entries(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.uniform(-1.0, 1.0)).collect()
    }
}
